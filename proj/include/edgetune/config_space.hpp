#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace edgetune {

using Vec10 = Eigen::Matrix<double, 10, 1>;

enum class CongestionControl { Cubic, Reno, Vegas, Bbr };
enum class Pacing { PfifoFast, Fq };
enum class HttpVersion { H1_1, H2 };

const char* to_cstring(CongestionControl cc);
const char* to_cstring(Pacing p);
const char* to_cstring(HttpVersion h);

/// One point in the seven-knob web serving stack space. Ids are stable
/// mixed-radix encodings of the per-knob value indices in declaration
/// order (cc most significant), covering [0, 767].
struct Configuration {
    CongestionControl cc = CongestionControl::Cubic;
    int icw = 10;  // initial congestion window, MSS units
    int slow_start_after_idle = 1;
    int low_latency = 0;
    int autocorking = 1;
    Pacing pacing = Pacing::PfifoFast;
    HttpVersion http = HttpVersion::H1_1;

    int id() const;
    static Configuration from_id(int id);

    /// Canonical short form, e.g.
    /// "cc=cubic,icw=10,ssai=1,ll=0,ac=1,pacing=pfifo_fast,http=h1.1".
    std::string to_string() const;

    bool operator==(const Configuration&) const = default;
};

Configuration default_config();

/// Encodes a configuration as a point in [0,1]^10: one-hot congestion
/// control (4), icw scaled by (icw-1)/29 (1), then the five binaries
/// ssai, low_latency, autocorking, pacing==fq, http==h2.
Vec10 encode(const Configuration& c);

constexpr int kKnobCount = 7;
extern const char* const kKnobNames[kKnobCount];  // cc, icw, ssai, ...

/// The tunable space: per-knob value lists. The full space enumerates
/// 768 configurations; a restricted space pins some knobs to their
/// defaults while keeping global ids.
struct ConfigSpace {
    std::vector<CongestionControl> cc_values;
    std::vector<int> icw_values;
    std::vector<int> ssai_values;
    std::vector<int> ll_values;
    std::vector<int> ac_values;
    std::vector<Pacing> pacing_values;
    std::vector<HttpVersion> http_values;

    static ConfigSpace full();

    /// Knobs named in `free_knobs` keep their full value lists; all
    /// others are pinned to the default configuration's value. Unknown
    /// knob names raise std::invalid_argument.
    static ConfigSpace restricted(const std::vector<std::string>& free_knobs);

    std::size_t total_size() const;

    /// All configurations of this space exactly once, in id order.
    std::vector<Configuration> enumerate() const;

    /// Latin-hypercube sample of k distinct configurations: each knob's
    /// ordered value list is split into k strata round-robin, strata are
    /// permuted independently per knob, and one value is drawn per
    /// stratum. Duplicate rows are repaired by column swaps, which keep
    /// the per-knob value multisets intact.
    std::vector<Configuration> lhc_sample(int k, std::mt19937_64& rng) const;
};

}  // namespace edgetune
