#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobfair/candidates.hpp"

namespace mobfair {

// Binary predictions indexed by ObjectIndex.
struct LabelVector {
  std::vector<std::uint8_t> values;

  std::size_t size() const { return values.size(); }
  std::size_t positives() const;
};

// Which departures from the global rate count as evidence.
enum class Tail {
  two_sided,  // theta_in != theta_out
  high,       // theta_in > theta_out only
  low,        // theta_in < theta_out only
};

std::string to_string(Tail tail);
Tail tail_from_string(const std::string& s);

struct ScanConfig {
  double alpha = 0.01;
  std::uint32_t n_sims = 999;
  std::uint64_t seed = 20240601;
  Tail tail = Tail::two_sided;
  unsigned workers = 1;

  // Throws ConfigError on alpha outside (0, 1) or n_sims == 0.
  void validate() const;
  // False when 1 / (n_sims + 1) > alpha, i.e. no outcome can reject.
  bool rejection_possible() const;
};

// Bernoulli log-likelihood at the MLE theta = P / N with 0 log 0 = 0.
// Requires 0 <= P <= N and N >= 1.
double loglik_h0(std::uint64_t positives, std::uint64_t total);

// Bernoulli log-likelihood with separate inside/outside MLE rates for a
// candidate holding n_c objects of which p_c are positive. Returns nullopt
// when n_c == N (no outside objects, the candidate is skipped).
std::optional<double> loglik_h1(std::uint64_t p_c, std::uint64_t n_c, std::uint64_t positives, std::uint64_t total);

// log T_c = loglik_h1 - loglik_h0, restricted to `tail` (0 on the excluded
// side), clamped at 0. nullopt for skipped candidates.
std::optional<double> log_ratio(std::uint64_t p_c, std::uint64_t n_c, std::uint64_t positives, std::uint64_t total,
                                Tail tail = Tail::two_sided);

struct ObservedScan {
  double t_obs = 0.0;               // max log ratio over the pool
  std::vector<double> log_ratios;   // per candidate; -inf for skipped candidates
};

struct ExtremeCandidate {
  std::size_t candidate = 0;  // index into the pool
  double log_t = 0.0;
  double p_value = 1.0;
};

struct ScanResult {
  double t_obs = 0.0;
  std::vector<double> null_distribution;
  double p_hat = 1.0;
  bool rejected = false;
  double alpha = 0.01;
  std::uint32_t n_sims = 0;
  std::uint64_t seed = 0;
  std::vector<ExtremeCandidate> extreme;
  std::vector<ObjectIndex> u_hat;  // union of extreme tidsets, sorted
};

// Precomputed view of a candidate pool for repeated scans: identical tidsets
// (common across nested subsets and shifted grids) are evaluated once, and the
// Monte Carlo maximum skips tidset sizes whose best achievable ratio cannot
// beat the running maximum. Both are exact.
class ScanEngine {
 public:
  // `n_objects` is the length of every label vector scanned with this engine.
  ScanEngine(const CandidatePool& pool, std::size_t n_objects);

  std::size_t candidates() const { return candidate_to_unique_.size(); }
  std::size_t unique_tidsets() const { return sizes_.size(); }

  ObservedScan observed(const LabelVector& labels, Tail tail = Tail::two_sided) const;

  // One maximum log ratio per simulation; simulation b shuffles the labels
  // with a generator seeded by seed ^ b, so results do not depend on the
  // worker count.
  std::vector<double> null_distribution(const LabelVector& labels, const ScanConfig& cfg) const;

  ScanResult run(const LabelVector& labels, const ScanConfig& cfg) const;

 private:
  void check_labels(const LabelVector& labels) const;

  const CandidatePool* pool_;
  std::size_t n_objects_;
  std::vector<std::uint32_t> candidate_to_unique_;  // UINT32_MAX for skipped
  std::vector<std::size_t> offsets_;                // CSR over unique tidsets
  std::vector<ObjectIndex> members_;
  std::vector<std::uint32_t> sizes_;
  std::vector<std::vector<std::uint32_t>> by_size_;  // unique tidset ids grouped by size
  std::vector<std::uint32_t> distinct_sizes_;
};

ObservedScan scan_observed(const CandidatePool& pool, const LabelVector& labels, Tail tail = Tail::two_sided);

std::vector<double> monte_carlo_null(const CandidatePool& pool, const LabelVector& labels, const ScanConfig& cfg);

// Rank-based p-values: p_hat = (1 + #{T_b >= T_obs}) / (n + 1), rejection iff
// p_hat <= alpha; when rejected every candidate with the same rank p-value
// <= alpha is extreme and u_hat is the union of their tidsets.
ScanResult decide(double t_obs, std::span<const double> null_distribution, std::span<const double> log_ratios,
                  const CandidatePool& pool, const ScanConfig& cfg);

ScanResult run_scan(const CandidatePool& pool, const LabelVector& labels, const ScanConfig& cfg);

// Monte Carlo rank p-value of `value` against the null sample.
double rank_p_value(double value, std::span<const double> sorted_null);

// `{t_obs, p_hat, rejected, alpha, n_sims, seed, extreme, u_hat}`.
nlohmann::json to_json(const ScanResult& result, const CandidatePool& pool, const GridFamily& family,
                       const ObjectRegistry& objects);

}  // namespace mobfair
