#include "edgetune/config_space.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace edgetune {

namespace {

const std::vector<CongestionControl> kCcValues = {
    CongestionControl::Cubic, CongestionControl::Reno,
    CongestionControl::Vegas, CongestionControl::Bbr};
const std::vector<int> kIcwValues = {1, 4, 10, 16, 20, 30};
const std::vector<int> kBinaryValues = {0, 1};
const std::vector<Pacing> kPacingValues = {Pacing::PfifoFast, Pacing::Fq};
const std::vector<HttpVersion> kHttpValues = {HttpVersion::H1_1,
                                              HttpVersion::H2};

template <typename T>
int index_of(const std::vector<T>& values, const T& v) {
    auto it = std::find(values.begin(), values.end(), v);
    if (it == values.end()) throw std::invalid_argument("value not in knob list");
    return static_cast<int>(it - values.begin());
}

}  // namespace

const char* const kKnobNames[kKnobCount] = {
    "cc", "icw", "ssai", "low_latency", "autocorking", "pacing", "http"};

const char* to_cstring(CongestionControl cc) {
    switch (cc) {
        case CongestionControl::Cubic: return "cubic";
        case CongestionControl::Reno: return "reno";
        case CongestionControl::Vegas: return "vegas";
        case CongestionControl::Bbr: return "bbr";
    }
    return "?";
}

const char* to_cstring(Pacing p) {
    return p == Pacing::PfifoFast ? "pfifo_fast" : "fq";
}

const char* to_cstring(HttpVersion h) {
    return h == HttpVersion::H1_1 ? "h1.1" : "h2";
}

int Configuration::id() const {
    int digits[kKnobCount] = {
        static_cast<int>(cc),
        index_of(kIcwValues, icw),
        slow_start_after_idle,
        low_latency,
        autocorking,
        static_cast<int>(pacing),
        static_cast<int>(http)};
    const int radix[kKnobCount] = {4, 6, 2, 2, 2, 2, 2};
    int id = 0;
    for (int i = 0; i < kKnobCount; ++i) id = id * radix[i] + digits[i];
    return id;
}

Configuration Configuration::from_id(int id) {
    if (id < 0 || id >= 768) throw std::invalid_argument("configuration id out of range");
    const int radix[kKnobCount] = {4, 6, 2, 2, 2, 2, 2};
    int digits[kKnobCount];
    for (int i = kKnobCount - 1; i >= 0; --i) {
        digits[i] = id % radix[i];
        id /= radix[i];
    }
    Configuration c;
    c.cc = static_cast<CongestionControl>(digits[0]);
    c.icw = kIcwValues[digits[1]];
    c.slow_start_after_idle = digits[2];
    c.low_latency = digits[3];
    c.autocorking = digits[4];
    c.pacing = static_cast<Pacing>(digits[5]);
    c.http = static_cast<HttpVersion>(digits[6]);
    return c;
}

std::string Configuration::to_string() const {
    std::ostringstream os;
    os << "cc=" << to_cstring(cc) << ",icw=" << icw
       << ",ssai=" << slow_start_after_idle << ",ll=" << low_latency
       << ",ac=" << autocorking << ",pacing=" << to_cstring(pacing)
       << ",http=" << to_cstring(http);
    return os.str();
}

Configuration default_config() {
    return Configuration{CongestionControl::Cubic, 10, 1, 0, 1,
                         Pacing::PfifoFast, HttpVersion::H1_1};
}

Vec10 encode(const Configuration& c) {
    Vec10 x = Vec10::Zero();
    x[static_cast<int>(c.cc)] = 1.0;
    x[4] = (c.icw - 1) / 29.0;
    x[5] = c.slow_start_after_idle;
    x[6] = c.low_latency;
    x[7] = c.autocorking;
    x[8] = c.pacing == Pacing::Fq ? 1.0 : 0.0;
    x[9] = c.http == HttpVersion::H2 ? 1.0 : 0.0;
    return x;
}

ConfigSpace ConfigSpace::full() {
    return ConfigSpace{kCcValues,    kIcwValues,    kBinaryValues,
                       kBinaryValues, kBinaryValues, kPacingValues,
                       kHttpValues};
}

ConfigSpace ConfigSpace::restricted(const std::vector<std::string>& free_knobs) {
    for (const auto& k : free_knobs) {
        bool known = false;
        for (const char* name : kKnobNames) known |= (k == name);
        if (!known) throw std::invalid_argument("unknown knob name: " + k);
    }
    auto has = [&](const char* name) {
        return std::find(free_knobs.begin(), free_knobs.end(), name) !=
               free_knobs.end();
    };
    const Configuration d = default_config();
    ConfigSpace s;
    s.cc_values = has("cc") ? kCcValues : std::vector<CongestionControl>{d.cc};
    s.icw_values = has("icw") ? kIcwValues : std::vector<int>{d.icw};
    s.ssai_values =
        has("ssai") ? kBinaryValues : std::vector<int>{d.slow_start_after_idle};
    s.ll_values =
        has("low_latency") ? kBinaryValues : std::vector<int>{d.low_latency};
    s.ac_values =
        has("autocorking") ? kBinaryValues : std::vector<int>{d.autocorking};
    s.pacing_values = has("pacing") ? kPacingValues : std::vector<Pacing>{d.pacing};
    s.http_values = has("http") ? kHttpValues : std::vector<HttpVersion>{d.http};
    return s;
}

std::size_t ConfigSpace::total_size() const {
    return cc_values.size() * icw_values.size() * ssai_values.size() *
           ll_values.size() * ac_values.size() * pacing_values.size() *
           http_values.size();
}

std::vector<Configuration> ConfigSpace::enumerate() const {
    std::vector<Configuration> out;
    out.reserve(total_size());
    for (auto cc : cc_values)
        for (int icw : icw_values)
            for (int ssai : ssai_values)
                for (int ll : ll_values)
                    for (int ac : ac_values)
                        for (auto pacing : pacing_values)
                            for (auto http : http_values)
                                out.push_back(Configuration{cc, icw, ssai, ll,
                                                            ac, pacing, http});
    std::sort(out.begin(), out.end(),
              [](const Configuration& a, const Configuration& b) {
                  return a.id() < b.id();
              });
    return out;
}

namespace {

// Per-knob column of k values: value index j of the ordered list lands in
// stratum j mod k (round-robin); each of the k samples owns one stratum
// under a random permutation and draws one member of it.
template <typename T>
std::vector<T> lhc_column(const std::vector<T>& values, int k,
                          std::mt19937_64& rng) {
    const int v = static_cast<int>(values.size());
    std::vector<std::vector<T>> strata(k);
    if (v >= k) {
        for (int j = 0; j < v; ++j) strata[j % k].push_back(values[j]);
    } else {
        for (int j = 0; j < k; ++j) strata[j].push_back(values[j % v]);
    }
    std::vector<int> perm(k);
    for (int i = 0; i < k; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<T> column(k);
    for (int i = 0; i < k; ++i) {
        const auto& stratum = strata[perm[i]];
        std::uniform_int_distribution<std::size_t> pick(0, stratum.size() - 1);
        column[i] = stratum[pick(rng)];
    }
    return column;
}

}  // namespace

std::vector<Configuration> ConfigSpace::lhc_sample(int k,
                                                   std::mt19937_64& rng) const {
    if (k < 1) throw std::invalid_argument("lhc_sample: k must be positive");
    if (static_cast<std::size_t>(k) > total_size())
        throw std::invalid_argument("sample exceeds space");

    if (static_cast<std::size_t>(k) == total_size()) {
        // exhaustive sample: any permutation of the space is exactly
        // balanced per knob
        std::vector<Configuration> out = enumerate();
        std::shuffle(out.begin(), out.end(), rng);
        return out;
    }

    auto cc_col = lhc_column(cc_values, k, rng);
    auto icw_col = lhc_column(icw_values, k, rng);
    auto ssai_col = lhc_column(ssai_values, k, rng);
    auto ll_col = lhc_column(ll_values, k, rng);
    auto ac_col = lhc_column(ac_values, k, rng);
    auto pacing_col = lhc_column(pacing_values, k, rng);
    auto http_col = lhc_column(http_values, k, rng);

    auto row = [&](int i) {
        return Configuration{cc_col[i],    icw_col[i],    ssai_col[i],
                             ll_col[i],    ac_col[i],     pacing_col[i],
                             http_col[i]};
    };
    auto swap_in_column = [&](int knob, int a, int b) {
        switch (knob) {
            case 0: std::swap(cc_col[a], cc_col[b]); break;
            case 1: std::swap(icw_col[a], icw_col[b]); break;
            case 2: std::swap(ssai_col[a], ssai_col[b]); break;
            case 3: std::swap(ll_col[a], ll_col[b]); break;
            case 4: std::swap(ac_col[a], ac_col[b]); break;
            case 5: std::swap(pacing_col[a], pacing_col[b]); break;
            case 6: std::swap(http_col[a], http_col[b]); break;
        }
    };

    // Column swaps preserve per-knob multisets, so duplicate rows are
    // repaired by hill-climbing on the count of over-occupied cells,
    // accepting occasional sideways swaps to leave plateaus.
    std::vector<int> row_ids(k);
    std::vector<int> occupancy(768, 0);
    long excess = 0;
    auto place = [&](int id) {
        if (occupancy[id] >= 1) ++excess;
        ++occupancy[id];
    };
    auto remove = [&](int id) {
        if (occupancy[id] >= 2) --excess;
        --occupancy[id];
    };
    for (int i = 0; i < k; ++i) {
        row_ids[i] = row(i).id();
        place(row_ids[i]);
    }

    std::uniform_int_distribution<int> knob_pick(0, kKnobCount - 1);
    std::uniform_int_distribution<int> row_pick(0, k - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (long step = 0; excess > 0; ++step) {
        if (step > 500000L)
            throw std::runtime_error("lhc_sample: duplicate repair stalled");
        // start anywhere, move the first colliding row from there
        int i = row_pick(rng);
        while (occupancy[row_ids[i]] < 2) i = (i + 1) % k;
        int m = row_pick(rng);
        if (m == i) m = (m + 1) % k;
        const int d = knob_pick(rng);

        const long before = excess;
        remove(row_ids[i]);
        remove(row_ids[m]);
        swap_in_column(d, i, m);
        const int new_i = row(i).id(), new_m = row(m).id();
        place(new_i);
        place(new_m);
        if (excess < before || (excess == before && coin(rng) < 0.5)) {
            row_ids[i] = new_i;
            row_ids[m] = new_m;
        } else {
            remove(new_i);
            remove(new_m);
            swap_in_column(d, i, m);
            place(row_ids[i]);
            place(row_ids[m]);
        }
    }

    std::vector<Configuration> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) out.push_back(row(i));
    return out;
}

}  // namespace edgetune
