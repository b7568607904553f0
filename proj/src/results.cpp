#include "excellence/results.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace excellence {

namespace {

using nlohmann::json;

json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

json interval_json(const Interval& ci) { return json::array({number(ci.lo), number(ci.hi)}); }

json model_json(const ModelSummary& m) {
  return {{"beta0", number(m.beta0)},
          {"sigma2", number(m.sigma2)},
          {"se_beta0", number(m.se_beta0)},
          {"se_sigma2", number(m.se_sigma2)},
          {"loglik", number(m.loglik)},
          {"icc", number(m.icc)},
          {"wald_z", number(m.wald_z)},
          {"wald_p", number(m.wald_p)},
          {"ranking_reasonable", m.ranking_reasonable},
          {"converged", m.converged},
          {"boundary", m.boundary},
          {"grand_mean_prob", number(m.grand_mean_prob)},
          {"mean_raw_proportion", number(m.mean_raw_proportion)},
          {"sig_vs_mean_goldstein_level", kGoldsteinLevel},
          {"warnings", m.warnings}};
}

json institution_json(const ExportedInstitution& x) {
  const auto& e = x.estimate;
  return {{"institution_id", e.institution_id},
          {"name", x.name},
          {"country", x.country},
          {"latitude", number(x.latitude)},
          {"longitude", number(x.longitude)},
          {"n_papers", e.n_papers},
          {"n_top", e.n_top},
          {"raw_prop", number(e.raw_prop)},
          {"eb_logit", number(e.eb_logit)},
          {"eb_se", number(e.eb_se)},
          {"eb_prob", number(e.eb_prob)},
          {"ci95", interval_json(e.ci95)},
          {"ci_goldstein", interval_json(e.ci_goldstein)},
          {"sig_vs_mean", to_string(e.sig_vs_mean)},
          {"sig_vs_mean_goldstein", to_string(e.sig_vs_mean_goldstein)},
          {"rank_score", number(e.rank_score)},
          {"rank", e.rank}};
}

json document_json(const ResultsDocument& doc) {
  json subjects = json::array();
  for (const auto& s : doc.subjects) {
    json insts = json::array();
    for (const auto& i : s.institutions) insts.push_back(institution_json(i));
    subjects.push_back({{"subject", s.subject},
                        {"name", s.name},
                        {"n_institutions", s.n_institutions},
                        {"model", model_json(s.model)},
                        {"institutions", std::move(insts)}});
  }
  return {{"schema_version", doc.schema_version}, {"generated_at", doc.generated_at}, {"subjects", subjects}};
}

void write_canonical(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out.push_back('{');
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map order: sorted keys
        if (!first) out.push_back(',');
        first = false;
        out += json(it.key()).dump();
        out.push_back(':');
        write_canonical(it.value(), out);
      }
      out.push_back('}');
      break;
    }
    case json::value_t::array: {
      out.push_back('[');
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out.push_back(',');
        write_canonical(j[i], out);
      }
      out.push_back(']');
      break;
    }
    case json::value_t::number_float: {
      double x = j.get<double>();
      if (x == 0.0) x = 0.0;  // drop the sign of -0
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", x);
      out += buf;
      break;
    }
    default:
      out += j.dump();
  }
}

double num(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nan("");
  return v.get<double>();
}

Interval interval_from(const json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2) throw std::invalid_argument(std::string(key) + " must be a 2-element array");
  return {a[0].is_null() ? std::nan("") : a[0].get<double>(), a[1].is_null() ? std::nan("") : a[1].get<double>()};
}

}  // namespace

ModelSummary summarize_model(const FitResult& fit, const ClusterTable& table) {
  ModelSummary m;
  m.beta0 = fit.params.beta0;
  m.sigma2 = fit.sigma2();
  m.se_beta0 = fit.se_beta0;
  m.se_sigma2 = fit.se_sigma2;
  m.loglik = fit.loglik;
  m.icc = fit.icc;
  m.wald_z = fit.wald_z;
  m.wald_p = fit.wald_p;
  m.converged = fit.converged;
  m.boundary = fit.boundary;
  m.grand_mean_prob = fit.grand_mean_prob;
  m.mean_raw_proportion = table.mean_raw_proportion;
  m.warnings = fit.warnings;
  if (fit.converged) {
    try {
      m.ranking_reasonable = wald_test(fit).significant;
    } catch (const UndefinedTest&) {
      m.ranking_reasonable = false;
    }
  }
  return m;
}

std::string to_canonical_json(const ResultsDocument& doc) {
  std::string out;
  write_canonical(document_json(doc), out);
  out.push_back('\n');
  return out;
}

ResultsDocument parse_results(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("results document is not valid JSON: ") + e.what());
  }
  try {
    ResultsDocument doc;
    doc.schema_version = j.at("schema_version").get<int>();
    if (doc.schema_version != kSchemaVersion)
      throw std::invalid_argument("unsupported schema_version " + std::to_string(doc.schema_version) +
                                  " (expected " + std::to_string(kSchemaVersion) + ")");
    doc.generated_at = j.at("generated_at").get<std::string>();
    for (const auto& s : j.at("subjects")) {
      SubjectResult r;
      r.subject = s.at("subject").get<std::string>();
      r.name = s.at("name").get<std::string>();
      r.n_institutions = s.at("n_institutions").get<std::size_t>();
      const auto& m = s.at("model");
      r.model.beta0 = num(m, "beta0");
      r.model.sigma2 = num(m, "sigma2");
      r.model.se_beta0 = num(m, "se_beta0");
      r.model.se_sigma2 = num(m, "se_sigma2");
      r.model.loglik = num(m, "loglik");
      r.model.icc = num(m, "icc");
      r.model.wald_z = num(m, "wald_z");
      r.model.wald_p = num(m, "wald_p");
      r.model.ranking_reasonable = m.at("ranking_reasonable").get<bool>();
      r.model.converged = m.at("converged").get<bool>();
      r.model.boundary = m.at("boundary").get<bool>();
      r.model.grand_mean_prob = num(m, "grand_mean_prob");
      r.model.mean_raw_proportion = num(m, "mean_raw_proportion");
      r.model.warnings = m.at("warnings").get<std::vector<std::string>>();
      for (const auto& i : s.at("institutions")) {
        ExportedInstitution x;
        auto& e = x.estimate;
        e.institution_id = i.at("institution_id").get<std::string>();
        e.subject = r.subject;
        x.name = i.at("name").get<std::string>();
        x.country = i.at("country").get<std::string>();
        x.latitude = num(i, "latitude");
        x.longitude = num(i, "longitude");
        e.n_papers = i.at("n_papers").get<std::int64_t>();
        e.n_top = i.at("n_top").get<std::int64_t>();
        e.raw_prop = num(i, "raw_prop");
        e.eb_logit = num(i, "eb_logit");
        e.eb_se = num(i, "eb_se");
        e.eb_prob = num(i, "eb_prob");
        e.ci95 = interval_from(i, "ci95");
        e.ci_goldstein = interval_from(i, "ci_goldstein");
        e.sig_vs_mean = parse_significance(i.at("sig_vs_mean").get<std::string>());
        e.sig_vs_mean_goldstein = parse_significance(i.at("sig_vs_mean_goldstein").get<std::string>());
        e.rank_score = num(i, "rank_score");
        e.rank = i.at("rank").get<std::size_t>();
        r.institutions.push_back(std::move(x));
      }
      doc.subjects.push_back(std::move(r));
    }
    return doc;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("results document does not match the schema: ") + e.what());
  }
}

void export_results(const ResultsDocument& doc, const std::filesystem::path& path) {
  const std::string text = to_canonical_json(doc);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "': " + std::strerror(errno));
}

ResultsDocument load_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "': " + std::strerror(errno));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_results(ss.str());
}

std::string iso8601_utc(long long epoch_seconds) {
  const std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace excellence
