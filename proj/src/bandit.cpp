#include "edgetune/bandit.hpp"

#include "edgetune/bocd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace edgetune {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t h = seed ^ (salt + 0x9E3779B97F4A7C15ULL);
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return h;
}

}  // namespace

void ConfigScoreBoard::add(int config_id, const std::string& website_id,
                           double plt_ms) {
    const double lp = std::log(std::max(plt_ms, 1e-9));
    ++grand_.n;
    grand_.sum_log += lp;
    auto& site = sites_[website_id];
    ++site.n;
    site.sum_log += lp;

    auto& agg = configs_[config_id];
    ++agg.n;
    agg.sum_log += lp;
    agg.sum_plt += plt_ms;
    auto& [sn, ssum] = agg.by_site[website_id];
    ++sn;
    ssum += lp;
    ++counts_[config_id];
}

long ConfigScoreBoard::count(int config_id) const {
    auto it = configs_.find(config_id);
    return it == configs_.end() ? 0 : it->second.n;
}

double ConfigScoreBoard::mean_plt(int config_id) const {
    auto it = configs_.find(config_id);
    return it == configs_.end() || it->second.n == 0
               ? 0.0
               : it->second.sum_plt / it->second.n;
}

double ConfigScoreBoard::score(int config_id) const {
    auto it = configs_.find(config_id);
    if (it == configs_.end() || it->second.n == 0)
        return std::numeric_limits<double>::infinity();
    const ConfigAgg& agg = it->second;

    // Leave-one-out site offsets: each sample is compared against its
    // site's level measured from OTHER samples, so a config's own
    // observation never cancels itself. Aggregated per site:
    //   sum_loo = (n_own * site_sum - own_sum) / (site_n - 1)
    double adjusted = agg.sum_log;
    for (const auto& [site, stats] : agg.by_site) {
        const Level& lvl = sites_.at(site);
        if (lvl.n > 1)
            adjusted -= (stats.first * lvl.sum_log - stats.second) / (lvl.n - 1);
        else
            adjusted -= stats.first * grand_.mean();
    }
    return adjusted / agg.n;
}

int ConfigScoreBoard::argmin_score(long min_count) const {
    int best = -1;
    double best_score = std::numeric_limits<double>::infinity();
    for (const auto& [id, agg] : configs_) {
        if (agg.n < min_count) continue;
        const double s = score(id);
        if (s < best_score) {
            best_score = s;
            best = id;
        }
    }
    return best;
}

std::vector<int> ConfigScoreBoard::top_k(int k) const {
    std::vector<std::pair<double, int>> scored;
    scored.reserve(configs_.size());
    for (const auto& [id, agg] : configs_) scored.emplace_back(score(id), id);
    std::sort(scored.begin(), scored.end());
    std::vector<int> out;
    for (int i = 0; i < k && i < static_cast<int>(scored.size()); ++i)
        out.push_back(scored[i].second);
    return out;
}

BanditController::BanditController(ConfigSpace space, EnsembleParams params)
    : space_(std::move(space)),
      space_list_(space_.enumerate()),
      params_(params),
      gate_rng_(mix_seed(params.seed, 0x6761746500ULL)) {
    if (params_.epsilon < 0.0 || params_.epsilon > 1.0)
        throw std::invalid_argument("bandit: epsilon must be in [0, 1]");
}

const ClassState* BanditController::find_class(int class_id) const {
    auto it = classes_.find(class_id);
    return it == classes_.end() ? nullptr : &it->second;
}

ClassState& BanditController::state(int class_id) {
    auto it = classes_.find(class_id);
    if (it == classes_.end())
        throw std::invalid_argument("bandit: unknown class id");
    return it->second;
}

ClassState& BanditController::ensure_class(int class_id) {
    auto it = classes_.find(class_id);
    if (it != classes_.end()) return it->second;

    ClassState cs;
    cs.class_id = class_id;
    cs.rng.seed(mix_seed(params_.seed, static_cast<std::uint64_t>(class_id)));
    cs.gp.init_sample = params_.init_sample;
    cs.gp.min_sample_tested = params_.min_sample_tested;
    cs.gp.ei_rel_threshold = params_.ei_rel_threshold;

    const int k = std::min<std::size_t>(params_.init_sample, space_list_.size());
    for (auto& c : space_.lhc_sample(k, cs.rng)) cs.pending_lhc.push_back(c);
    cs.dt_seed_slot = tree_.trained() && !params_.no_dt;
    return classes_.emplace(class_id, std::move(cs)).first->second;
}

Configuration BanditController::best_or_default(const ClassState& cs) const {
    return cs.best_config_id >= 0 ? Configuration::from_id(cs.best_config_id)
                                  : default_config();
}

void BanditController::refresh_gp(ClassState& cs) {
    if (!cs.gp_dirty || cs.scores.empty()) return;
    const int n = static_cast<int>(cs.scores.config_count());
    Eigen::MatrixXd X(n, 10);
    Eigen::VectorXd y(n);
    int i = 0;
    // one aggregated observation per tested config, on the site-adjusted
    // log scale so EI reads as relative PLT improvement
    for (const auto& [config_id, count] : cs.scores.observation_counts()) {
        X.row(i) = encode(Configuration::from_id(config_id)).transpose();
        y[i] = cs.scores.score(config_id);
        ++i;
    }
    cs.gp.model = GPModel::fit(X, y);
    cs.gp_dirty = false;
}

Configuration BanditController::steady_decision(ClassState& cs,
                                                const FeatureVector& f,
                                                std::string* arm_out) {
    *arm_out = arm::kDtree;
    // fast path: the class's current decision (the published NC -> config
    // value); the tree generalizes where no decision exists yet
    if (cs.best_config_id >= 0) return Configuration::from_id(cs.best_config_id);
    if (!params_.no_dt && tree_.trained())
        return Configuration::from_id(predict(tree_, f));
    return default_config();
}

std::pair<Configuration, std::string> BanditController::on_session(
    int class_id, const FeatureVector& f) {
    ClassState& cs = ensure_class(class_id);

    // population-wide epsilon gate ahead of any phase logic; draws either
    // roam the whole space or resample the class's current front-runners
    if (params_.epsilon > 0.0) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(gate_rng_) < params_.epsilon) {
            if (u(gate_rng_) < params_.epsilon_resample_share &&
                !cs.scores.empty()) {
                const auto pool =
                    cs.scores.top_k(params_.epsilon_resample_pool);
                std::uniform_int_distribution<std::size_t> pick(
                    0, pool.size() - 1);
                return {Configuration::from_id(pool[pick(gate_rng_)]),
                        arm::kEpsilon};
            }
            std::uniform_int_distribution<std::size_t> pick(
                0, space_list_.size() - 1);
            return {space_list_[pick(gate_rng_)], arm::kEpsilon};
        }
    }

    if (cs.phase == BanditPhase::Bootstrap) {
        if (!cs.pending_lhc.empty()) {
            const bool seeded_slot =
                cs.dt_seed_slot &&
                cs.pending_lhc.size() ==
                    static_cast<std::size_t>(std::min<std::size_t>(
                        params_.init_sample, space_list_.size()));
            Configuration c = cs.pending_lhc.front();
            cs.pending_lhc.pop_front();
            if (seeded_slot && tree_.trained())
                return {Configuration::from_id(predict(tree_, f)), arm::kDtree};
            if (cs.pending_lhc.empty())
                cs.phase = params_.no_gp ? BanditPhase::Steady
                                         : BanditPhase::GpExplore;
            return {c, arm::kLhc};
        }
        cs.phase =
            params_.no_gp ? BanditPhase::Steady : BanditPhase::GpExplore;
    }

    if (cs.phase == BanditPhase::GpExplore) {
        std::vector<Configuration> candidates;
        candidates.reserve(space_list_.size());
        for (const auto& c : space_list_)
            if (!cs.gp.tested_config_ids.count(c.id())) candidates.push_back(c);

        if (cs.scores.empty()) {
            // probes still in flight; hold the phase and serve the
            // steady fallback until feedback lands
            std::string tag;
            Configuration c = steady_decision(cs, f, &tag);
            return {c, tag};
        }
        if (candidates.empty()) {
            cs.phase = BanditPhase::Steady;  // space exhausted
        } else {
            refresh_gp(cs);
            auto [suggestion, ei] = suggest_next(cs.gp, candidates);
            if (should_stop(cs.gp)) {
                cs.phase = BanditPhase::Steady;
            } else {
                return {suggestion, arm::kGp};
            }
        }
    }

    std::string tag;
    Configuration c = steady_decision(cs, f, &tag);
    return {c, tag};
}

void BanditController::update_best(ClassState& cs, int config_id) {
    if (cs.best_config_id < 0) {
        cs.best_config_id = config_id;
        return;
    }
    if (cs.phase == BanditPhase::Steady) {
        // sticky incumbent: score differences are log PLT ratios, and the
        // required margin depends on the challenger's evidence
        if (config_id == cs.best_config_id) return;
        const double diff = cs.scores.score(config_id) -
                            cs.scores.score(cs.best_config_id);
        const double margin =
            cs.scores.count(config_id) >= 2
                ? std::log(1.0 - params_.incumbent_switch_margin)
                : std::log(1.0 - params_.single_sample_switch_margin);
        if (diff < margin) cs.best_config_id = config_id;
        return;
    }
    cs.best_config_id = cs.scores.argmin_score();
}

void BanditController::on_feedback(const PerformanceSample& sample) {
    ClassState& cs = ensure_class(sample.class_id);
    cs.history.push_back(sample);
    if (sample.condition_changed) {
        // the blended PLT is unattributable, but the probe still counts
        // as spent so exploration does not repeat it
        cs.gp.tested_config_ids.insert(sample.config_id);
        return;
    }

    if (params_.best_window > 0 &&
        static_cast<long>(cs.history.size()) > params_.best_window) {
        // staleness window: rebuild scores from the trailing history
        cs.scores = ConfigScoreBoard{};
        const auto first = cs.history.end() - params_.best_window;
        for (auto it = first; it != cs.history.end(); ++it)
            if (!it->condition_changed)
                cs.scores.add(it->config_id, it->website_id, it->plt_ms);
    } else {
        cs.scores.add(sample.config_id, sample.website_id, sample.plt_ms);
    }

    cs.gp.tested_config_ids.insert(sample.config_id);
    cs.gp_dirty = true;
    update_best(cs, sample.config_id);
}

BanditController::ModelUpdate BanditController::update_models(
    const FeatureMask& mask) {
    std::vector<TrainingSample> training;
    ModelUpdate update;
    for (auto& [class_id, cs] : classes_) {
        if (cs.history.empty()) continue;
        // slow-phase re-evaluation: accumulated evidence may have
        // re-ranked the incumbent since its feedback-time selection
        if (cs.phase == BanditPhase::Steady && cs.best_config_id >= 0) {
            const int candidate = cs.scores.argmin_score(2);
            if (candidate >= 0 && candidate != cs.best_config_id &&
                cs.scores.score(candidate) <
                    cs.scores.score(cs.best_config_id) +
                        std::log(1.0 - params_.slow_reeval_margin))
                cs.best_config_id = candidate;
        }
        const int label =
            cs.best_config_id >= 0 ? cs.best_config_id : default_config().id();
        for (const auto& s : cs.history)
            training.push_back({s.features, label});
        update.class_decisions.emplace(class_id, Configuration::from_id(label));
    }
    if (training.empty())
        throw std::runtime_error("update_models: no observed samples");

    DTreeHyper hyper;
    hyper.mask = mask;
    tree_ = train_dtree(training, hyper);
    update.tree = tree_;
    update.training_samples = static_cast<long>(training.size());
    return update;
}

void BanditController::reset_class_on_drift(int class_id) {
    ClassState& cs = state(class_id);
    cs.phase = BanditPhase::GpExplore;
    cs.pending_lhc.clear();
    cs.gp_dirty = true;
    cs.gp.last_max_ei = std::numeric_limits<double>::infinity();
}

bool BanditController::maybe_reset_on_drift(int class_id, int window,
                                            double hazard_lambda) {
    ClassState& cs = state(class_id);
    if (cs.phase != BanditPhase::Steady || cs.best_config_id < 0) return false;

    std::vector<double> stream;
    for (const auto& s : cs.history)
        if (s.config_id == cs.best_config_id) stream.push_back(std::log(s.plt_ms));
    if (static_cast<int>(stream.size()) > window)
        stream.erase(stream.begin(), stream.end() - window);
    if (stream.size() < 8) return false;

    double mean = 0.0;
    for (double v : stream) mean += v;
    mean /= stream.size();
    double var = 0.0;
    for (double v : stream) var += (v - mean) * (v - mean);
    var = std::max(var / stream.size(), 1e-6);

    if (detect_changepoints(stream, hazard_lambda, mean, var).empty())
        return false;
    reset_class_on_drift(class_id);
    return true;
}

std::map<std::string, std::vector<double>> arm_contributions(
    const std::vector<std::pair<std::int64_t, std::string>>& tagged_decisions,
    const std::vector<std::int64_t>& bucket_edges) {
    if (bucket_edges.size() < 2)
        throw std::invalid_argument("arm_contributions: need >= 2 bucket edges");
    const std::size_t buckets = bucket_edges.size() - 1;

    std::map<std::string, std::vector<double>> counts;
    std::vector<double> totals(buckets, 0.0);
    for (const auto& [ts, tag] : tagged_decisions) {
        auto it = std::upper_bound(bucket_edges.begin(), bucket_edges.end(), ts);
        if (it == bucket_edges.begin() || it == bucket_edges.end()) continue;
        const std::size_t b = static_cast<std::size_t>(
            std::distance(bucket_edges.begin(), it) - 1);
        auto& row = counts[tag];
        if (row.empty()) row.assign(buckets, 0.0);
        row[b] += 1.0;
        totals[b] += 1.0;
    }
    for (auto& [tag, row] : counts)
        for (std::size_t b = 0; b < buckets; ++b)
            if (totals[b] > 0.0) row[b] /= totals[b];
    return counts;
}

}  // namespace edgetune
