#include "spinecho/spinchain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spinecho/errors.hpp"

namespace spinecho {

namespace {

constexpr std::int64_t kParallelThreshold = 1 << 12;
constexpr std::int64_t kReductionChunk = 1 << 12;
constexpr int kMaxDenseSpins = 10;

void require_same_dimension(std::span<const Amplitude> in, std::span<Amplitude> out,
                            std::uint64_t dim)
{
    if (in.size() != dim || out.size() != dim) {
        throw ConfigError("amplitude span does not match basis dimension " +
                          std::to_string(dim));
    }
    if (in.data() == out.data()) {
        throw ConfigError("operator input and output must not alias");
    }
}

// Single-site spin-1/2 matrix elements <to|S_a|from>, with 0 = down, 1 = up.
Amplitude spin_element(int axis, int to, int from)
{
    switch (axis) {
    case 0: // Sx
        return to != from ? Amplitude{0.5, 0.0} : Amplitude{};
    case 1: // Sy
        if (to == from) {
            return {};
        }
        return to == 1 ? Amplitude{0.0, -0.5} : Amplitude{0.0, 0.5};
    default: // Sz
        return to == from ? Amplitude{from == 1 ? 0.5 : -0.5, 0.0} : Amplitude{};
    }
}

template <typename ChunkFn>
double chunked_sum(std::int64_t n, ChunkFn&& chunk_sum)
{
    const std::int64_t n_chunks = (n + kReductionChunk - 1) / kReductionChunk;
    std::vector<double> partial(static_cast<std::size_t>(n_chunks), 0.0);
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
    for (std::int64_t c = 0; c < n_chunks; ++c) {
        const std::int64_t lo = c * kReductionChunk;
        const std::int64_t hi = std::min(n, lo + kReductionChunk);
        partial[static_cast<std::size_t>(c)] = chunk_sum(lo, hi);
    }
    double total = 0.0;
    for (double p : partial) {
        total += p;
    }
    return total;
}

} // namespace

SpinBasis::SpinBasis(int n_spins) : n_spins_(n_spins)
{
    if (n_spins < kMinSpins || n_spins > kMaxSpins) {
        throw ConfigError("n_spins must lie in [" + std::to_string(kMinSpins) + ", " +
                          std::to_string(kMaxSpins) + "], got " + std::to_string(n_spins));
    }
}

std::vector<Bond> chain_bonds(int n_spins)
{
    std::vector<Bond> bonds;
    if (n_spins == 2) {
        bonds.push_back({0, 1});
        return bonds;
    }
    bonds.reserve(static_cast<std::size_t>(n_spins));
    for (int j = 0; j < n_spins; ++j) {
        bonds.push_back({j, (j + 1) % n_spins});
    }
    return bonds;
}

double ChainCouplings::j_eff() const noexcept
{
    return std::sqrt(j_x * j_x + j_y * j_y + j_z * j_z);
}

std::array<double, 3> ChainCouplings::effective() const noexcept
{
    if (!reversed) {
        return {j_x, j_y, j_z};
    }
    return {-j_x * (1.0 + reversal_error * reversal_noise[0]),
            -j_y * (1.0 + reversal_error * reversal_noise[1]),
            -j_z * (1.0 + reversal_error * reversal_noise[2])};
}

ChainCouplings ChainCouplings::flipped() const noexcept
{
    ChainCouplings c = *this;
    c.reversed = !reversed;
    return c;
}

SpinState::SpinState(SpinBasis basis)
    : basis_(basis), amps_(static_cast<std::size_t>(basis.dimension()))
{
}

SpinState::SpinState(SpinBasis basis, std::vector<Amplitude> amplitudes)
    : basis_(basis), amps_(std::move(amplitudes))
{
    if (amps_.size() != basis_.dimension()) {
        throw ConfigError("amplitude vector length " + std::to_string(amps_.size()) +
                          " does not match dimension " + std::to_string(basis_.dimension()));
    }
}

double SpinState::norm() const
{
    return std::sqrt(squared_norm(amps_));
}

Amplitude SpinState::inner(const SpinState& other) const
{
    if (other.dimension() != dimension()) {
        throw ConfigError("inner product of states with different dimensions");
    }
    Amplitude acc{};
    for (std::size_t b = 0; b < amps_.size(); ++b) {
        acc += std::conj(amps_[b]) * other.amps_[b];
    }
    return acc;
}

SpinState product_state(const SpinBasis& basis, std::span<const Spin> pattern)
{
    if (pattern.size() != static_cast<std::size_t>(basis.n_spins())) {
        throw ConfigError("product_state pattern has " + std::to_string(pattern.size()) +
                          " sites, basis has " + std::to_string(basis.n_spins()));
    }
    std::uint64_t index = 0;
    for (std::size_t j = 0; j < pattern.size(); ++j) {
        if (pattern[j] == Spin::up) {
            index |= std::uint64_t{1} << j;
        }
    }
    SpinState state(basis);
    state[index] = 1.0;
    return state;
}

SpinState cat_state(const SpinBasis& basis, std::uint64_t first, std::uint64_t second)
{
    if (first == second || first >= basis.dimension() || second >= basis.dimension()) {
        throw ConfigError("cat_state needs two distinct basis indices inside the basis");
    }
    SpinState state(basis);
    state[first] = 1.0 / std::numbers::sqrt2;
    state[second] = 1.0 / std::numbers::sqrt2;
    return state;
}

SpinState apply_interaction(const SpinState& state, const ChainCouplings& couplings)
{
    ChainOperator op(state.basis(), couplings);
    SpinState out(state.basis());
    op.apply(state.amplitudes(), out.amplitudes(), 0.0);
    return out;
}

SpinState apply_magnetization(const SpinState& state)
{
    SpinState out(state.basis());
    const auto& basis = state.basis();
    for (std::uint64_t b = 0; b < state.dimension(); ++b) {
        out[b] = basis.magnetization(b) * state[b];
    }
    return out;
}

double expectation_mz(const SpinState& state)
{
    return weighted_mz(state.basis(), state.amplitudes());
}

Eigen::MatrixXcd dense_hamiltonian(const SpinBasis& basis, const ChainCouplings& couplings,
                                   double h)
{
    if (basis.n_spins() > kMaxDenseSpins) {
        throw ConfigError("dense_hamiltonian refuses n_spins > " +
                          std::to_string(kMaxDenseSpins));
    }
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    const auto j = couplings.effective();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);

    for (const Bond& bond : chain_bonds(basis.n_spins())) {
        const std::uint64_t keep = ~((std::uint64_t{1} << bond.first) |
                                     (std::uint64_t{1} << bond.second));
        for (std::uint64_t from = 0; from < basis.dimension(); ++from) {
            const int fi = static_cast<int>((from >> bond.first) & 1U);
            const int fj = static_cast<int>((from >> bond.second) & 1U);
            for (int ti = 0; ti < 2; ++ti) {
                for (int tj = 0; tj < 2; ++tj) {
                    Amplitude element{};
                    for (int axis = 0; axis < 3; ++axis) {
                        element += j[static_cast<std::size_t>(axis)] *
                                   spin_element(axis, ti, fi) * spin_element(axis, tj, fj);
                    }
                    if (element == Amplitude{}) {
                        continue;
                    }
                    const std::uint64_t to = (from & keep) |
                                             (std::uint64_t(ti) << bond.first) |
                                             (std::uint64_t(tj) << bond.second);
                    m(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) += element;
                }
            }
        }
    }
    for (Eigen::Index b = 0; b < dim; ++b) {
        m(b, b) += h * basis.magnetization(static_cast<std::uint64_t>(b));
    }
    return m;
}

Eigen::MatrixXcd dense_magnetization(const SpinBasis& basis)
{
    if (basis.n_spins() > kMaxDenseSpins) {
        throw ConfigError("dense_magnetization refuses n_spins > " +
                          std::to_string(kMaxDenseSpins));
    }
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (Eigen::Index b = 0; b < dim; ++b) {
        m(b, b) = basis.magnetization(static_cast<std::uint64_t>(b));
    }
    return m;
}

ChainOperator::ChainOperator(SpinBasis basis, const ChainCouplings& couplings)
    : basis_(basis), bonds_(chain_bonds(basis.n_spins()))
{
    const auto [jx, jy, jz] = couplings.effective();
    flip_flop_ = 0.25 * (jx + jy);
    double_flip_ = 0.25 * (jx - jy);
    zz_ = 0.25 * jz;

    masks_.reserve(bonds_.size());
    for (const Bond& bond : bonds_) {
        masks_.push_back((std::uint64_t{1} << bond.first) | (std::uint64_t{1} << bond.second));
    }

    const std::uint64_t dim = basis_.dimension();
    zz_diagonal_.resize(dim);
    mz_diagonal_.resize(dim);
    for (std::uint64_t b = 0; b < dim; ++b) {
        int aligned = 0;
        for (const Bond& bond : bonds_) {
            const bool same = ((b >> bond.first) & 1U) == ((b >> bond.second) & 1U);
            aligned += same ? 1 : -1;
        }
        zz_diagonal_[b] = zz_ * aligned;
        mz_diagonal_[b] = basis_.magnetization(b);
    }

    // Highest low bits first so that long runs are swept together.
    std::vector<std::size_t> order(bonds_.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        order[k] = k;
    }
    auto lo_of = [this](std::size_t k) { return std::min(bonds_[k].first, bonds_[k].second); };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lo_of(a) > lo_of(b); });
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k % kGroupSize == 0) {
            groups_.emplace_back();
        }
        BondGroup& g = groups_.back();
        const Bond& bond = bonds_[order[k]];
        g.mask[g.count] = masks_[order[k]];
        g.lo_bit[g.count] = static_cast<unsigned>(std::min(bond.first, bond.second));
        g.hi_bit[g.count] = static_cast<unsigned>(std::max(bond.first, bond.second));
        g.run_bit = g.lo_bit[g.count];
        ++g.count;
    }
}

namespace {

// One run of a bond group: out[b] (+)= diag + sum_k c_k in[partner_k + i].
template <int G, bool First, bool Last, typename Store>
inline void sweep_run(std::uint64_t start, std::int64_t run, const double* zz, const double* mz,
                      double h, const Amplitude* src, Amplitude* dst, const double* c,
                      const Amplitude* const* partner, Store store)
{
#pragma omp simd
    for (std::int64_t i = 0; i < run; ++i) {
        const std::uint64_t b = start + static_cast<std::uint64_t>(i);
        Amplitude v;
        if constexpr (First) {
            v = (zz[b] + h * mz[b]) * src[b];
        } else {
            v = dst[b];
        }
        for (int k = 0; k < G; ++k) {
            v += c[k] * partner[k][i];
        }
        if constexpr (Last) {
            dst[b] = store(v.real(), v.imag());
        } else {
            dst[b] = v;
        }
    }
}

template <int G, typename Store>
inline void sweep_run_any(bool first, bool last, std::uint64_t start, std::int64_t run,
                          const double* zz, const double* mz, double h, const Amplitude* src,
                          Amplitude* dst, const double* c, const Amplitude* const* partner,
                          Store store)
{
    if (first && last) {
        sweep_run<G, true, true>(start, run, zz, mz, h, src, dst, c, partner, store);
    } else if (first) {
        sweep_run<G, true, false>(start, run, zz, mz, h, src, dst, c, partner, store);
    } else if (last) {
        sweep_run<G, false, true>(start, run, zz, mz, h, src, dst, c, partner, store);
    } else {
        sweep_run<G, false, false>(start, run, zz, mz, h, src, dst, c, partner, store);
    }
}

} // namespace

template <typename Store>
void ChainOperator::gather(std::span<const Amplitude> in, std::span<Amplitude> out, double h,
                           Store store) const
{
    const std::uint64_t dim = basis_.dimension();
    require_same_dimension(in, out, dim);
    const auto n = static_cast<std::int64_t>(dim);
    const double* zz = zz_diagonal_.data();
    const double* mz = mz_diagonal_.data();
    const Amplitude* src = in.data();
    Amplitude* dst = out.data();
    const double coef[2] = {double_flip_, flip_flop_};
    const std::size_t n_groups = groups_.size();

#pragma omp parallel if (n >= kParallelThreshold)
    for (std::size_t gi = 0; gi < n_groups; ++gi) {
        const BondGroup& g = groups_[gi];
        const bool first = gi == 0;
        const bool last = gi + 1 == n_groups;
        const std::int64_t run = std::int64_t{1} << g.run_bit;
        const std::int64_t n_runs = n / run;
#pragma omp for schedule(static)
        for (std::int64_t r = 0; r < n_runs; ++r) {
            const auto start = static_cast<std::uint64_t>(r * run);
            // Inside a run every bond bit of the group is fixed.
            double c[kGroupSize] = {};
            const Amplitude* partner[kGroupSize] = {};
            for (int k = 0; k < g.count; ++k) {
                c[k] = coef[((start >> g.lo_bit[k]) ^ (start >> g.hi_bit[k])) & 1U];
                partner[k] = src + (start ^ g.mask[k]);
            }
            switch (g.count) {
            case 1:
                sweep_run_any<1>(first, last, start, run, zz, mz, h, src, dst, c, partner, store);
                break;
            case 2:
                sweep_run_any<2>(first, last, start, run, zz, mz, h, src, dst, c, partner, store);
                break;
            case 3:
                sweep_run_any<3>(first, last, start, run, zz, mz, h, src, dst, c, partner, store);
                break;
            default:
                sweep_run_any<4>(first, last, start, run, zz, mz, h, src, dst, c, partner, store);
                break;
            }
        }
    }
}

void ChainOperator::apply(std::span<const Amplitude> in, std::span<Amplitude> out,
                          double h) const
{
    gather(in, out, h, [](double re, double im) { return Amplitude{re, im}; });
}

void ChainOperator::apply_generator(std::span<const Amplitude> in, std::span<Amplitude> out,
                                    double h) const
{
    // -i (re + i im) = im - i re
    gather(in, out, h, [](double re, double im) { return Amplitude{im, -re}; });
}

void ChainOperator::apply_reference(std::span<const Amplitude> in, std::span<Amplitude> out,
                                    double h) const
{
    const std::uint64_t dim = basis_.dimension();
    require_same_dimension(in, out, dim);
    std::fill(out.begin(), out.end(), Amplitude{});
    for (std::uint64_t b = 0; b < dim; ++b) {
        out[b] += h * basis_.magnetization(b) * in[b];
    }
    // Bond by bond over each 4-state block {00, 01, 10, 11} of the bond's bits.
    for (const Bond& bond : bonds_) {
        const std::uint64_t bi = std::uint64_t{1} << bond.first;
        const std::uint64_t bj = std::uint64_t{1} << bond.second;
        for (std::uint64_t b = 0; b < dim; ++b) {
            if ((b & (bi | bj)) != 0) {
                continue;
            }
            const std::uint64_t s00 = b;
            const std::uint64_t s01 = b | bi;
            const std::uint64_t s10 = b | bj;
            const std::uint64_t s11 = b | bi | bj;
            out[s00] += zz_ * in[s00] + double_flip_ * in[s11];
            out[s11] += zz_ * in[s11] + double_flip_ * in[s00];
            out[s01] += -zz_ * in[s01] + flip_flop_ * in[s10];
            out[s10] += -zz_ * in[s10] + flip_flop_ * in[s01];
        }
    }
}

double squared_norm(std::span<const Amplitude> v)
{
    const Amplitude* p = v.data();
    return chunked_sum(static_cast<std::int64_t>(v.size()), [p](std::int64_t lo, std::int64_t hi) {
        double s = 0.0;
        for (std::int64_t b = lo; b < hi; ++b) {
            s += std::norm(p[b]);
        }
        return s;
    });
}

double weighted_mz(const SpinBasis& basis, std::span<const Amplitude> v)
{
    if (v.size() != basis.dimension()) {
        throw ConfigError("weighted_mz: span does not match basis dimension");
    }
    const Amplitude* p = v.data();
    return chunked_sum(static_cast<std::int64_t>(v.size()),
                       [p, &basis](std::int64_t lo, std::int64_t hi) {
                           double s = 0.0;
                           for (std::int64_t b = lo; b < hi; ++b) {
                               s += basis.magnetization(static_cast<std::uint64_t>(b)) *
                                    std::norm(p[b]);
                           }
                           return s;
                       });
}

} // namespace spinecho
