#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace spinecho {

enum class Channel { interacting, noninteracting };

std::string_view to_string(Channel c) noexcept;
/// Throws ConfigError on an unknown name.
Channel channel_from_string(std::string_view name);

/// C(2 tau0) = 2 |<c1^* c2>| with its statistical error.
struct CoherencePoint {
    double tau0 = 0.0;
    double c_value = 0.0;
    int n_realizations = 0;
    double std_error = 0.0;
    Channel channel = Channel::interacting;
};

struct CoherenceCurve {
    Channel channel = Channel::interacting;
    /// Ordered by strictly increasing tau0.
    std::vector<CoherencePoint> points;
    /// Snapshot of the configuration that produced the curve.
    nlohmann::json parameters = nlohmann::json::object();

    /// Throws ConfigError unless tau0 increases strictly and all channels match.
    void validate() const;
};

} // namespace spinecho
