#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "excellence/corpus.hpp"
#include "excellence/percentile.hpp"

namespace excellence {

/// Portable draws on top of mt19937_64 (the <random> distributions are
/// implementation-defined, which would make simulated corpora differ
/// between standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // (0, 1)
  double normal();
  double standard_logistic();
  bool bernoulli(double p) { return uniform() < p; }
  std::int64_t binomial(std::int64_t n, double p);
  std::size_t index(std::size_t n);  // uniform in [0, n)

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct SimulationConfig {
  std::uint64_t seed = 1;
  std::size_t n_institutions = 200;
  std::size_t papers_per_institution = 500;
  double beta0 = -1.7346;
  double sigma = 0.5;
  double collaboration_rate = 0.0;
  std::string subject = "SIM";
  int year_min = 2005;
  int year_max = 2009;
};

/// Each institution draws u_j ~ N(0, sigma^2). Every paper carries a latent
/// score t = beta0 + u_j + L with L standard logistic, so P(t > 0) is
/// logistic(beta0 + u_j) exactly; `assignments` flags t > 0 (the precomputed
/// table). Citations increase with t, so stratified top-10% flagging only
/// approximately recovers the target probabilities (closely when
/// logistic(beta0) is near 0.1).
struct SimulatedCorpus {
  std::vector<PaperRecord> papers;
  std::vector<InstitutionRecord> institutions;
  std::vector<PercentileAssignment> assignments;
  std::vector<double> true_effects;  // u_j by institution index
};

SimulatedCorpus simulate_corpus(const SimulationConfig& config);

/// Writes papers.jsonl, institutions.csv, assignments.csv and truth.csv.
void write_simulated_corpus(const SimulatedCorpus& sim, const std::filesystem::path& dir);

/// Direct (n_j, k_j) draws: k_j ~ Binomial(n, logistic(beta0 + u_j)).
ClusterTable simulate_cluster_table(std::uint64_t seed, std::size_t n_clusters, std::int64_t papers_per_cluster,
                                    double beta0, double sigma);

}  // namespace excellence
