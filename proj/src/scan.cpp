#include "mobfair/scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "mobfair/error.hpp"
#include "mobfair/io.hpp"
#include "mobfair/parallel.hpp"
#include "mobfair/rng.hpp"

namespace mobfair {

namespace {

constexpr std::uint32_t kSkipped = std::numeric_limits<std::uint32_t>::max();

// k log(k / total), zero when k == 0.
double term(std::uint64_t k, std::uint64_t total) {
  if (k == 0) return 0.0;
  return static_cast<double>(k) * std::log(static_cast<double>(k) / static_cast<double>(total));
}

bool on_tail(std::uint64_t p_c, std::uint64_t n_c, std::uint64_t positives, std::uint64_t total, Tail tail) {
  if (tail == Tail::two_sided) return true;
  // Compare p_c / n_c with (P - p_c) / (N - n_c) without division.
  const auto inside = static_cast<unsigned __int128>(p_c) * (total - n_c);
  const auto outside = static_cast<unsigned __int128>(positives - p_c) * n_c;
  return tail == Tail::high ? inside > outside : inside < outside;
}

// Log-likelihood ratio evaluated from a table of k log k. Every scan path
// (observed and simulated) goes through this so equal (p_c, n_c) pairs give
// bitwise-equal values.
class RatioKernel {
 public:
  RatioKernel(std::uint64_t positives, std::uint64_t total, Tail tail)
      : positives_(positives), total_(total), tail_(tail), xlogx_(total + 1) {
    for (std::uint64_t k = 1; k <= total; ++k) {
      xlogx_[k] = static_cast<double>(k) * std::log(static_cast<double>(k));
    }
    l0_ = xlogx_[positives] + xlogx_[total - positives] - xlogx_[total];
  }

  double operator()(std::uint64_t p_c, std::uint64_t n_c) const {
    if (!on_tail(p_c, n_c, positives_, total_, tail_)) return 0.0;
    const std::uint64_t out_n = total_ - n_c;
    const std::uint64_t out_p = positives_ - p_c;
    const double l1 = xlogx_[p_c] + xlogx_[n_c - p_c] - xlogx_[n_c] + xlogx_[out_p] + xlogx_[out_n - out_p] -
                      xlogx_[out_n];
    const double r = l1 - l0_;
    return r > 0.0 ? r : 0.0;
  }

  // Largest ratio any candidate of n_c objects can reach. The ratio is convex
  // in p_c, so the bound sits at one end of the feasible range.
  double upper_bound(std::uint64_t n_c) const {
    const std::uint64_t lo = n_c > total_ - positives_ ? n_c - (total_ - positives_) : 0;
    const std::uint64_t hi = std::min<std::uint64_t>(n_c, positives_);
    return std::max((*this)(lo, n_c), (*this)(hi, n_c));
  }

 private:
  std::uint64_t positives_;
  std::uint64_t total_;
  Tail tail_;
  std::vector<double> xlogx_;
  double l0_ = 0.0;
};

// Values within this relative distance count as ties in rank p-values, so
// that rounding noise between mathematically equal ratios does not break ties.
double tie_tolerance(double v) { return 1e-9 * std::max(1.0, std::abs(v)); }

}  // namespace

std::size_t LabelVector::positives() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](std::uint8_t v) { return v != 0; }));
}

std::string to_string(Tail tail) {
  switch (tail) {
    case Tail::two_sided: return "two_sided";
    case Tail::high: return "high";
    case Tail::low: return "low";
  }
  return "two_sided";
}

Tail tail_from_string(const std::string& s) {
  if (s == "two_sided") return Tail::two_sided;
  if (s == "high") return Tail::high;
  if (s == "low") return Tail::low;
  throw ConfigError("scan.tail must be one of two_sided, high, low; got '" + s + "'");
}

void ScanConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("scan.alpha must lie in (0, 1)");
  if (n_sims < 1) throw ConfigError("scan.n_sims must be >= 1");
}

bool ScanConfig::rejection_possible() const { return 1.0 / (static_cast<double>(n_sims) + 1.0) <= alpha; }

double loglik_h0(std::uint64_t positives, std::uint64_t total) {
  if (total == 0 || positives > total) throw InvalidInputError("loglik_h0 requires 0 <= P <= N and N >= 1");
  return term(positives, total) + term(total - positives, total);
}

std::optional<double> loglik_h1(std::uint64_t p_c, std::uint64_t n_c, std::uint64_t positives, std::uint64_t total) {
  if (total == 0 || positives > total || n_c == 0 || n_c > total || p_c > n_c || p_c > positives ||
      (n_c - p_c) > (total - positives)) {
    throw InvalidInputError("loglik_h1 requires 1 <= n_c <= N, 0 <= p_c <= n_c, p_c <= P");
  }
  if (n_c == total) return std::nullopt;
  const std::uint64_t out_n = total - n_c;
  const std::uint64_t out_p = positives - p_c;
  return term(p_c, n_c) + term(n_c - p_c, n_c) + term(out_p, out_n) + term(out_n - out_p, out_n);
}

std::optional<double> log_ratio(std::uint64_t p_c, std::uint64_t n_c, std::uint64_t positives, std::uint64_t total,
                                Tail tail) {
  const auto l1 = loglik_h1(p_c, n_c, positives, total);
  if (!l1) return std::nullopt;
  if (!on_tail(p_c, n_c, positives, total, tail)) return 0.0;
  return std::max(0.0, *l1 - loglik_h0(positives, total));
}

ScanEngine::ScanEngine(const CandidatePool& pool, std::size_t n_objects) : pool_(&pool), n_objects_(n_objects) {
  candidate_to_unique_.assign(pool.size(), kSkipped);
  offsets_.push_back(0);
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> seen;
  pool.for_each([&](std::size_t i, const Candidate& c) {
    for (ObjectIndex o : c.tidset) {
      if (o >= n_objects) {
        throw InvalidInputError("candidate tidset references object " + std::to_string(o) +
                                " beyond the label vector");
      }
    }
    if (c.tidset.empty() || c.tidset.size() >= n_objects) return;
    const std::string_view bytes(reinterpret_cast<const char*>(c.tidset.data()),
                                 c.tidset.size() * sizeof(ObjectIndex));
    const std::uint64_t h = io::fnv1a(bytes);
    auto& bucket = seen[h];
    for (std::uint32_t u : bucket) {
      const std::size_t len = offsets_[u + 1] - offsets_[u];
      if (len == c.tidset.size() &&
          std::equal(c.tidset.begin(), c.tidset.end(), members_.begin() + static_cast<std::ptrdiff_t>(offsets_[u]))) {
        candidate_to_unique_[i] = u;
        return;
      }
    }
    const auto u = static_cast<std::uint32_t>(sizes_.size());
    members_.insert(members_.end(), c.tidset.begin(), c.tidset.end());
    offsets_.push_back(members_.size());
    sizes_.push_back(static_cast<std::uint32_t>(c.tidset.size()));
    bucket.push_back(u);
    candidate_to_unique_[i] = u;
  });

  std::vector<std::uint32_t> sizes = sizes_;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  distinct_sizes_ = sizes;
  by_size_.resize(distinct_sizes_.size());
  for (std::uint32_t u = 0; u < sizes_.size(); ++u) {
    const auto k = std::lower_bound(distinct_sizes_.begin(), distinct_sizes_.end(), sizes_[u]) - distinct_sizes_.begin();
    by_size_[static_cast<std::size_t>(k)].push_back(u);
  }
}

void ScanEngine::check_labels(const LabelVector& labels) const {
  if (labels.size() != n_objects_) {
    throw InvalidInputError("label vector has " + std::to_string(labels.size()) + " entries, expected " +
                            std::to_string(n_objects_));
  }
  if (pool_->empty()) throw NoCandidatesError("the candidate pool is empty");
  if (sizes_.empty()) throw NoCandidatesError("no candidate leaves objects outside it; nothing to test");
}

ObservedScan ScanEngine::observed(const LabelVector& labels, Tail tail) const {
  check_labels(labels);
  const RatioKernel kernel(labels.positives(), n_objects_, tail);
  std::vector<double> per_unique(sizes_.size());
  for (std::size_t u = 0; u < sizes_.size(); ++u) {
    std::uint64_t p = 0;
    for (std::size_t k = offsets_[u]; k < offsets_[u + 1]; ++k) p += labels.values[members_[k]] != 0;
    per_unique[u] = kernel(p, sizes_[u]);
  }
  ObservedScan out;
  out.log_ratios.resize(candidate_to_unique_.size());
  out.t_obs = 0.0;
  for (std::size_t i = 0; i < candidate_to_unique_.size(); ++i) {
    const std::uint32_t u = candidate_to_unique_[i];
    if (u == kSkipped) {
      out.log_ratios[i] = -std::numeric_limits<double>::infinity();
    } else {
      out.log_ratios[i] = per_unique[u];
      out.t_obs = std::max(out.t_obs, per_unique[u]);
    }
  }
  return out;
}

std::vector<double> ScanEngine::null_distribution(const LabelVector& labels, const ScanConfig& cfg) const {
  cfg.validate();
  check_labels(labels);
  const RatioKernel kernel(labels.positives(), n_objects_, cfg.tail);

  // Size groups in descending order of their best achievable ratio.
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(distinct_sizes_.size());
  for (std::size_t k = 0; k < distinct_sizes_.size(); ++k) order.emplace_back(kernel.upper_bound(distinct_sizes_[k]), k);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });

  std::vector<double> out(cfg.n_sims);
  parallel_for(cfg.n_sims, cfg.workers, [&](std::size_t b) {
    Rng rng(cfg.seed ^ static_cast<std::uint64_t>(b));
    std::vector<std::uint8_t> shuffled = labels.values;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      const std::size_t j = rng.below(i);
      std::swap(shuffled[i - 1], shuffled[j]);
    }
    double best = 0.0;
    for (const auto& [bound, k] : order) {
      if (bound <= best) break;
      const std::uint32_t n = distinct_sizes_[k];
      for (std::uint32_t u : by_size_[k]) {
        std::uint32_t p = 0;
        const ObjectIndex* m = members_.data() + offsets_[u];
        for (std::uint32_t t = 0; t < n; ++t) p += shuffled[m[t]];
        best = std::max(best, kernel(p, n));
      }
    }
    out[b] = best;
  });
  return out;
}

ScanResult ScanEngine::run(const LabelVector& labels, const ScanConfig& cfg) const {
  cfg.validate();
  std::vector<std::uint8_t> normalized(labels.values.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) normalized[i] = labels.values[i] != 0;
  const LabelVector clean{std::move(normalized)};
  const auto obs = observed(clean, cfg.tail);
  const auto null = null_distribution(clean, cfg);
  return decide(obs.t_obs, null, obs.log_ratios, *pool_, cfg);
}

ObservedScan scan_observed(const CandidatePool& pool, const LabelVector& labels, Tail tail) {
  return ScanEngine(pool, labels.size()).observed(labels, tail);
}

std::vector<double> monte_carlo_null(const CandidatePool& pool, const LabelVector& labels, const ScanConfig& cfg) {
  return ScanEngine(pool, labels.size()).null_distribution(labels, cfg);
}

double rank_p_value(double value, std::span<const double> sorted_null) {
  const auto first = std::lower_bound(sorted_null.begin(), sorted_null.end(), value - tie_tolerance(value));
  const auto at_least = static_cast<double>(sorted_null.end() - first);
  return (1.0 + at_least) / (static_cast<double>(sorted_null.size()) + 1.0);
}

ScanResult decide(double t_obs, std::span<const double> null_distribution, std::span<const double> log_ratios,
                  const CandidatePool& pool, const ScanConfig& cfg) {
  if (log_ratios.size() != pool.size()) throw InvalidInputError("one log ratio per candidate is required");
  ScanResult r;
  r.t_obs = t_obs;
  r.null_distribution.assign(null_distribution.begin(), null_distribution.end());
  r.alpha = cfg.alpha;
  r.n_sims = static_cast<std::uint32_t>(null_distribution.size());
  r.seed = cfg.seed;

  std::vector<double> sorted(null_distribution.begin(), null_distribution.end());
  std::sort(sorted.begin(), sorted.end());
  r.p_hat = rank_p_value(t_obs, sorted);
  r.rejected = r.p_hat <= cfg.alpha;
  if (!r.rejected) return r;

  std::vector<ObjectIndex> objects;
  for (std::size_t i = 0; i < log_ratios.size(); ++i) {
    if (!std::isfinite(log_ratios[i])) continue;
    const double p = rank_p_value(log_ratios[i], sorted);
    if (p <= cfg.alpha) {
      r.extreme.push_back({i, log_ratios[i], p});
      const auto& tids = pool[i].tidset;
      objects.insert(objects.end(), tids.begin(), tids.end());
    }
  }
  std::sort(objects.begin(), objects.end());
  objects.erase(std::unique(objects.begin(), objects.end()), objects.end());
  r.u_hat = std::move(objects);
  return r;
}

ScanResult run_scan(const CandidatePool& pool, const LabelVector& labels, const ScanConfig& cfg) {
  return ScanEngine(pool, labels.size()).run(labels, cfg);
}

nlohmann::json to_json(const ScanResult& result, const CandidatePool& pool, const GridFamily& family,
                       const ObjectRegistry& objects) {
  nlohmann::json extreme = nlohmann::json::array();
  for (const auto& e : result.extreme) {
    const Candidate& c = pool[e.candidate];
    extreme.push_back({{"grid", family.grids.at(c.grid).id},
                       {"cells", c.cells},
                       {"support", c.support()},
                       {"t_c", e.log_t},
                       {"p_c", e.p_value}});
  }
  nlohmann::json u_hat = nlohmann::json::array();
  for (ObjectIndex o : result.u_hat) u_hat.push_back(objects.id(o));
  return {{"t_obs", result.t_obs},
          {"p_hat", result.p_hat},
          {"rejected", result.rejected},
          {"alpha", result.alpha},
          {"n_sims", result.n_sims},
          {"seed", result.seed},
          {"null_distribution", result.null_distribution},
          {"extreme", std::move(extreme)},
          {"u_hat", std::move(u_hat)}};
}

}  // namespace mobfair
