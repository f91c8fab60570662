#pragma once

// Periodic spin-1/2 XYZ chain in the bit-encoded computational basis.
//
// Basis index b encodes site j as bit j; a set bit is spin up (S_z = +1/2).
// The Hamiltonian is
//
//   H(h) = sum_<i,j> [ Jx Sx_i Sx_j + Jy Sy_i Sy_j + Jz Sz_i Sz_j ] + h M_z,
//
// with bonds (j, j+1 mod N). Operators are spin-1/2, not Pauli matrices.
// Per bond the transverse part splits into a flip-flop channel acting on
// anti-aligned pairs with amplitude (Jx+Jy)/4 and a double-flip channel
// acting on aligned pairs with amplitude (Jx-Jy)/4.

#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spinecho {

using Amplitude = std::complex<double>;

class SpinBasis {
public:
    static constexpr int kMinSpins = 2;
    static constexpr int kMaxSpins = 24;

    /// Throws ConfigError outside [kMinSpins, kMaxSpins].
    explicit SpinBasis(int n_spins);

    int n_spins() const noexcept { return n_spins_; }
    std::uint64_t dimension() const noexcept { return std::uint64_t{1} << n_spins_; }

    /// Eigenvalue of M_z on basis index b: popcount(b) - N/2.
    double magnetization(std::uint64_t b) const noexcept
    {
        return static_cast<double>(std::popcount(b)) - 0.5 * n_spins_;
    }

    std::uint64_t all_up() const noexcept { return dimension() - 1; }
    static constexpr std::uint64_t all_down() noexcept { return 0; }

    friend bool operator==(const SpinBasis&, const SpinBasis&) = default;

private:
    int n_spins_;
};

struct Bond {
    int first;
    int second;
};

/// Periodic nearest-neighbour bonds (j, j+1 mod N). For N = 2 the single
/// bond (0, 1) is listed once.
std::vector<Bond> chain_bonds(int n_spins);

/// XYZ couplings plus the echo-reversal state.
///
/// When `reversed` is set the effective couplings are -J_a (1 + eps * xi_a)
/// where eps is `reversal_error` and xi_a are the fixed per-run draws in
/// `reversal_noise`. With eps = 0 the flip is exact.
struct ChainCouplings {
    double j_x = -0.47;
    double j_y = 0.79;
    double j_z = 0.37;
    bool reversed = false;
    double reversal_error = 0.0;
    std::array<double, 3> reversal_noise{0.0, 0.0, 0.0};

    double j_eff() const noexcept;

    /// Couplings actually entering H, after sign flip and perturbation.
    std::array<double, 3> effective() const noexcept;

    /// Same couplings with `reversed` toggled.
    ChainCouplings flipped() const noexcept;

    friend bool operator==(const ChainCouplings&, const ChainCouplings&) = default;
};

/// State vector over the 2^N computational basis.
class SpinState {
public:
    explicit SpinState(SpinBasis basis);
    SpinState(SpinBasis basis, std::vector<Amplitude> amplitudes);

    const SpinBasis& basis() const noexcept { return basis_; }
    std::uint64_t dimension() const noexcept { return basis_.dimension(); }

    std::span<Amplitude> amplitudes() noexcept { return amps_; }
    std::span<const Amplitude> amplitudes() const noexcept { return amps_; }

    Amplitude& operator[](std::uint64_t b) noexcept { return amps_[b]; }
    const Amplitude& operator[](std::uint64_t b) const noexcept { return amps_[b]; }

    double norm() const;
    /// <this|other>
    Amplitude inner(const SpinState& other) const;

private:
    SpinBasis basis_;
    std::vector<Amplitude> amps_;
};

enum class Spin : std::uint8_t { down = 0, up = 1 };

/// Computational basis state; pattern[j] is the spin on site j.
SpinState product_state(const SpinBasis& basis, std::span<const Spin> pattern);

/// (|first> + |second>) / sqrt(2) for two distinct basis indices.
SpinState cat_state(const SpinBasis& basis, std::uint64_t first, std::uint64_t second);

/// H_int |state>, matrix-free.
SpinState apply_interaction(const SpinState& state, const ChainCouplings& couplings);

/// M_z |state>.
SpinState apply_magnetization(const SpinState& state);

/// <state|M_z|state>.
double expectation_mz(const SpinState& state);

/// Dense H_int + h M_z for small chains (N <= 10); used as a test oracle.
Eigen::MatrixXcd dense_hamiltonian(const SpinBasis& basis, const ChainCouplings& couplings,
                                   double h);

/// Dense M_z (diagonal), N <= 10.
Eigen::MatrixXcd dense_magnetization(const SpinBasis& basis);

/// Precomputed plan for applying H(h) = H_int + h M_z repeatedly.
///
/// `apply` is the OpenMP kernel: bonds are fused into groups of up to four
/// and swept in contiguous runs, each output amplitude owned by one thread
/// and accumulated in a fixed order (diagonal, then bonds group by group),
/// so results are bitwise identical for any thread count. `apply_reference` is the serial bond-by-bond scatter
/// kernel, kept as an independent implementation for tests and benchmarks.
class ChainOperator {
public:
    ChainOperator(SpinBasis basis, const ChainCouplings& couplings);

    const SpinBasis& basis() const noexcept { return basis_; }

    /// out = H(h) in
    void apply(std::span<const Amplitude> in, std::span<Amplitude> out, double h) const;

    /// out = -i H(h) in
    void apply_generator(std::span<const Amplitude> in, std::span<Amplitude> out,
                         double h) const;

    /// Serial reference for `apply`.
    void apply_reference(std::span<const Amplitude> in, std::span<Amplitude> out,
                         double h) const;

private:
    static constexpr int kGroupSize = 4;

    // Bonds swept in one pass; `run_bit` is the lowest bond bit in the group.
    struct BondGroup {
        int count = 0;
        unsigned run_bit = 0;
        std::array<std::uint64_t, kGroupSize> mask{};
        std::array<unsigned, kGroupSize> lo_bit{};
        std::array<unsigned, kGroupSize> hi_bit{};
    };

    template <typename Store>
    void gather(std::span<const Amplitude> in, std::span<Amplitude> out, double h,
                Store store) const;

    SpinBasis basis_;
    std::vector<Bond> bonds_;
    std::vector<std::uint64_t> masks_;
    double flip_flop_;   // (Jx + Jy) / 4
    double double_flip_; // (Jx - Jy) / 4
    double zz_;          // Jz / 4
    std::vector<double> zz_diagonal_;
    std::vector<double> mz_diagonal_;
    std::vector<BondGroup> groups_;
};

/// Fixed-chunk reductions; bitwise reproducible regardless of thread count.
double squared_norm(std::span<const Amplitude> v);
double weighted_mz(const SpinBasis& basis, std::span<const Amplitude> v);

} // namespace spinecho
