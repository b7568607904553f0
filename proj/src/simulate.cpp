#include "excellence/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>

#include "excellence/mlm.hpp"
#include "json.hpp"

namespace excellence {

double Rng::uniform() {
  // 53 random bits, shifted off zero
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double a = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double Rng::standard_logistic() {
  const double u = uniform();
  return std::log(u / (1.0 - u));
}

std::int64_t Rng::binomial(std::int64_t n, double p) {
  std::int64_t k = 0;
  for (std::int64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
  return k;
}

std::size_t Rng::index(std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

namespace {

const char* kCountries[] = {"DE", "US", "GB", "FR", "ES", "CH", "JP", "CN", "IT", "NL"};

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

DocType draw_doc_type(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.7) return DocType::article;
  if (u < 0.8) return DocType::review;
  return DocType::conference_paper;
}

}  // namespace

SimulatedCorpus simulate_corpus(const SimulationConfig& c) {
  if (c.n_institutions < 1 || c.papers_per_institution < 1) throw std::invalid_argument("empty simulation");
  if (!(c.sigma >= 0.0) || !(c.collaboration_rate >= 0.0 && c.collaboration_rate <= 1.0) || c.year_max < c.year_min)
    throw std::invalid_argument("simulation parameters out of range");

  Rng rng(c.seed);
  SimulatedCorpus sim;
  const int width = std::max<int>(4, static_cast<int>(std::to_string(c.n_institutions).size()));
  for (std::size_t j = 0; j < c.n_institutions; ++j) {
    InstitutionRecord inst;
    inst.institution_id = padded("I", j + 1, width);
    inst.name = "Institution " + padded("", j + 1, width);
    inst.country = kCountries[rng.index(std::size(kCountries))];
    inst.latitude = std::round((rng.uniform() * 120.0 - 60.0) * 1e4) / 1e4;
    inst.longitude = std::round((rng.uniform() * 360.0 - 180.0) * 1e4) / 1e4;
    sim.institutions.push_back(std::move(inst));
    sim.true_effects.push_back(c.sigma * rng.normal());
  }

  const std::size_t total = c.n_institutions * c.papers_per_institution;
  const int pwidth = std::max<int>(6, static_cast<int>(std::to_string(total).size()));
  std::vector<double> latent;
  latent.reserve(total);
  for (std::size_t j = 0; j < c.n_institutions; ++j) {
    for (std::size_t i = 0; i < c.papers_per_institution; ++i) {
      PaperRecord p;
      p.paper_id = padded("P", sim.papers.size() + 1, pwidth);
      p.year = c.year_min + static_cast<int>(rng.index(static_cast<std::size_t>(c.year_max - c.year_min + 1)));
      p.doc_type = draw_doc_type(rng);
      p.subject_areas = {c.subject};
      const double t = c.beta0 + sim.true_effects[j] + rng.standard_logistic();
      p.citations = std::llround(20.0 * std::exp(0.7 * t));
      p.journal_sjr2 = std::round(rng.uniform() * 5.0 * 1e4) / 1e4;
      p.affiliations = {sim.institutions[j].institution_id};
      if (c.n_institutions > 1 && rng.bernoulli(c.collaboration_rate)) {
        std::size_t other = rng.index(c.n_institutions - 1);
        if (other >= j) ++other;
        p.affiliations.insert(sim.institutions[other].institution_id);
      }
      latent.push_back(t);
      sim.papers.push_back(std::move(p));
    }
  }

  // Rank by latent score within stratum; the flag is the latent draw.
  std::map<Stratum, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < sim.papers.size(); ++i)
    strata[{c.subject, sim.papers[i].year, sim.papers[i].doc_type}].push_back(i);
  for (const auto& [s, idx] : strata) {
    std::vector<std::size_t> order = idx;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return latent[a] < latent[b]; });
    for (std::size_t r = 0; r < order.size(); ++r) {
      const double pct = 100.0 * static_cast<double>(r) / static_cast<double>(order.size());
      sim.assignments.push_back({sim.papers[order[r]].paper_id, s, r + 1, pct, latent[order[r]] > 0.0});
    }
  }
  return sim;
}

void write_simulated_corpus(const SimulatedCorpus& sim, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
    return out;
  };
  {
    auto out = open("papers.jsonl");
    for (const auto& p : sim.papers) {
      nlohmann::json j = {{"paper_id", p.paper_id},
                          {"year", p.year},
                          {"doc_type", to_string(p.doc_type)},
                          {"subject_areas", p.subject_areas},
                          {"citations", p.citations},
                          {"journal_sjr2", p.journal_sjr2},
                          {"affiliations", p.affiliations}};
      out << j.dump() << '\n';
    }
  }
  {
    auto out = open("institutions.csv");
    out << "institution_id,name,country,latitude,longitude\n";
    char buf[64];
    for (const auto& i : sim.institutions) {
      std::snprintf(buf, sizeof buf, "%.4f,%.4f", i.latitude, i.longitude);
      out << i.institution_id << ",\"" << i.name << "\"," << i.country << ',' << buf << '\n';
    }
  }
  {
    auto out = open("assignments.csv");
    write_assignments_csv(out, sim.assignments);
  }
  {
    auto out = open("truth.csv");
    out << "institution_id,u\n";
    char buf[64];
    for (std::size_t j = 0; j < sim.institutions.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", sim.true_effects[j]);
      out << sim.institutions[j].institution_id << ',' << buf << '\n';
    }
  }
}

ClusterTable simulate_cluster_table(std::uint64_t seed, std::size_t n_clusters, std::int64_t papers_per_cluster,
                                    double beta0, double sigma) {
  Rng rng(seed);
  std::vector<ClusterRow> rows;
  rows.reserve(n_clusters);
  for (std::size_t j = 0; j < n_clusters; ++j) {
    const double u = sigma * rng.normal();
    rows.push_back({padded("C", j + 1, 5), papers_per_cluster, rng.binomial(papers_per_cluster, logistic(beta0 + u))});
  }
  return make_cluster_table("SIM", std::move(rows));
}

}  // namespace excellence
