#include "excellence/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace excellence {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::int64_t to_int(const std::string& raw, std::size_t line, const char* field) {
  const std::string s = trim(raw);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size())
    throw ParseError(line, field, "not an integer: '" + raw + "'");
  return v;
}

double to_double(const std::string& raw, std::size_t line, const char* field) {
  const std::string s = trim(raw);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError(line, field, "not a number: '" + raw + "'");
  }
  if (used != s.size() || !std::isfinite(v))
    throw ParseError(line, field, "not a finite number: '" + raw + "'");
  return v;
}

std::set<std::string> split_list(const std::string& s) {
  std::set<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (!item.empty()) out.insert(item);
  }
  return out;
}

void validate(const PaperRecord& p, std::size_t line) {
  if (p.paper_id.empty()) throw ParseError(line, "paper_id", "must be non-empty");
  if (p.citations < 0) throw ParseError(line, "citations", "must be >= 0");
  if (!(p.journal_sjr2 >= 0.0)) throw ParseError(line, "journal_sjr2", "must be >= 0");
  if (p.subject_areas.empty()) throw ParseError(line, "subject_areas", "must be non-empty");
  if (p.affiliations.empty()) throw ParseError(line, "affiliations", "must be non-empty");
}

template <typename T>
T json_field(const json& obj, const char* name, std::size_t line) {
  const auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(line, name, "missing field");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(line, name, "wrong type");
  }
}

PaperRecord paper_from_json(const std::string& text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line, "", std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(line, "", "expected a JSON object");

  PaperRecord p;
  p.paper_id = json_field<std::string>(obj, "paper_id", line);
  {
    const auto it = obj.find("year");
    if (it == obj.end() || !it->is_number_integer()) throw ParseError(line, "year", "expected integer");
    p.year = it->get<int>();
  }
  try {
    p.doc_type = parse_doc_type(json_field<std::string>(obj, "doc_type", line));
  } catch (const std::invalid_argument& e) {
    throw ParseError(line, "doc_type", e.what());
  }
  for (auto& s : json_field<std::vector<std::string>>(obj, "subject_areas", line)) p.subject_areas.insert(s);
  {
    const auto it = obj.find("citations");
    if (it == obj.end() || !it->is_number_integer()) throw ParseError(line, "citations", "expected integer");
    p.citations = it->get<std::int64_t>();
  }
  {
    const auto it = obj.find("journal_sjr2");
    if (it == obj.end() || !it->is_number()) throw ParseError(line, "journal_sjr2", "expected number");
    p.journal_sjr2 = it->get<double>();
  }
  for (auto& s : json_field<std::vector<std::string>>(obj, "affiliations", line)) p.affiliations.insert(s);
  return p;
}

const std::vector<std::string> kPaperCsvHeader = {"paper_id",  "year",         "doc_type",    "subject_areas",
                                                  "citations", "journal_sjr2", "affiliations"};
const std::vector<std::string> kInstitutionCsvHeader = {"institution_id", "name", "country", "latitude",
                                                        "longitude"};

void expect_header(std::istream& in, std::size_t& line_no, const std::vector<std::string>& expected) {
  auto header = read_csv_record(in, line_no);
  if (!header) throw ParseError(1, "", "missing header");
  if (!header->empty()) {
    auto& first = header->front();
    if (first.rfind("\xEF\xBB\xBF", 0) == 0) first.erase(0, 3);
  }
  for (auto& h : *header) h = trim(h);
  if (*header != expected) throw ParseError(line_no, "", "unexpected header");
}

}  // namespace

std::string to_string(DocType t) {
  switch (t) {
    case DocType::article: return "article";
    case DocType::review: return "review";
    case DocType::conference_paper: return "conference_paper";
  }
  return "article";
}

DocType parse_doc_type(const std::string& s) {
  if (s == "article") return DocType::article;
  if (s == "review") return DocType::review;
  if (s == "conference_paper") return DocType::conference_paper;
  throw std::invalid_argument("unknown doc_type '" + s + "'");
}

ParseError::ParseError(std::size_t line, std::string field, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + (field.empty() ? "" : ", field '" + field + "'") +
                         ": " + what),
      line_(line),
      field_(std::move(field)) {}

std::optional<std::vector<std::string>> read_csv_record(std::istream& in, std::size_t& line_no) {
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  ++line_no;
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (quoted) {
        std::string next;
        if (!std::getline(in, next)) throw ParseError(line_no, "", "unterminated quoted field");
        ++line_no;
        cur.push_back('\n');
        line = std::move(next);
        i = 0;
        continue;
      }
      break;
    }
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\r' && i + 1 == line.size()) {
      // CRLF line ending
    } else {
      cur.push_back(c);
    }
    ++i;
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<PaperRecord> parse_papers(std::istream& in, PaperFormat format) {
  std::vector<PaperRecord> out;
  std::unordered_set<std::string> seen;
  auto accept = [&](PaperRecord p, std::size_t line) {
    validate(p, line);
    if (!seen.insert(p.paper_id).second)
      throw ParseError(line, "paper_id", "duplicate paper_id '" + p.paper_id + "'");
    out.push_back(std::move(p));
  };

  if (format == PaperFormat::jsonl) {
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
      ++line;
      if (trim(text).empty()) continue;
      accept(paper_from_json(text, line), line);
    }
    return out;
  }

  std::size_t line = 0;
  expect_header(in, line, kPaperCsvHeader);
  while (auto rec = read_csv_record(in, line)) {
    if (rec->size() == 1 && trim(rec->front()).empty()) continue;
    if (rec->size() != kPaperCsvHeader.size())
      throw ParseError(line, "", "expected " + std::to_string(kPaperCsvHeader.size()) + " columns");
    const auto& r = *rec;
    PaperRecord p;
    p.paper_id = trim(r[0]);
    p.year = static_cast<int>(to_int(r[1], line, "year"));
    try {
      p.doc_type = parse_doc_type(trim(r[2]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, "doc_type", e.what());
    }
    p.subject_areas = split_list(r[3]);
    p.citations = to_int(r[4], line, "citations");
    p.journal_sjr2 = to_double(r[5], line, "journal_sjr2");
    p.affiliations = split_list(r[6]);
    accept(std::move(p), line);
  }
  return out;
}

std::vector<InstitutionRecord> parse_institutions(std::istream& in) {
  std::vector<InstitutionRecord> out;
  std::unordered_set<std::string> seen;
  std::size_t line = 0;
  expect_header(in, line, kInstitutionCsvHeader);
  while (auto rec = read_csv_record(in, line)) {
    if (rec->size() == 1 && trim(rec->front()).empty()) continue;
    if (rec->size() != kInstitutionCsvHeader.size())
      throw ParseError(line, "", "expected " + std::to_string(kInstitutionCsvHeader.size()) + " columns");
    const auto& r = *rec;
    InstitutionRecord inst;
    inst.institution_id = trim(r[0]);
    inst.name = r[1];
    inst.country = trim(r[2]);
    inst.latitude = to_double(r[3], line, "latitude");
    inst.longitude = to_double(r[4], line, "longitude");
    if (inst.institution_id.empty()) throw ParseError(line, "institution_id", "must be non-empty");
    if (inst.latitude < -90.0 || inst.latitude > 90.0) throw ParseError(line, "latitude", "outside [-90, 90]");
    if (inst.longitude < -180.0 || inst.longitude > 180.0)
      throw ParseError(line, "longitude", "outside [-180, 180]");
    if (!seen.insert(inst.institution_id).second)
      throw ParseError(line, "institution_id", "duplicate institution_id '" + inst.institution_id + "'");
    out.push_back(std::move(inst));
  }
  return out;
}

Corpus::Corpus(std::vector<PaperRecord> papers, std::vector<InstitutionRecord> institutions, int census_year)
    : papers_(std::move(papers)), institutions_(std::move(institutions)), census_year_(census_year) {
  for (std::size_t i = 0; i < institutions_.size(); ++i) {
    if (!institution_index_.emplace(institutions_[i].institution_id, i).second)
      throw std::invalid_argument("duplicate institution_id '" + institutions_[i].institution_id + "'");
  }
  for (std::size_t i = 0; i < papers_.size(); ++i) {
    const auto& p = papers_[i];
    if (!paper_index_.emplace(p.paper_id, i).second)
      throw std::invalid_argument("duplicate paper_id '" + p.paper_id + "'");
    for (const auto& a : p.affiliations) {
      if (!institution_index_.count(a))
        throw std::invalid_argument("paper '" + p.paper_id + "' cites unknown institution '" + a + "'");
    }
  }
}

const InstitutionRecord* Corpus::find_institution(const std::string& id) const {
  const auto it = institution_index_.find(id);
  return it == institution_index_.end() ? nullptr : &institutions_[it->second];
}

const PaperRecord* Corpus::find_paper(const std::string& id) const {
  const auto it = paper_index_.find(id);
  return it == paper_index_.end() ? nullptr : &papers_[it->second];
}

std::vector<std::string> Corpus::subjects() const {
  std::set<std::string> s;
  for (const auto& p : papers_) s.insert(p.subject_areas.begin(), p.subject_areas.end());
  return {s.begin(), s.end()};
}

Corpus Corpus::filter_years(int year_min, int year_max) const {
  std::vector<PaperRecord> kept;
  std::copy_if(papers_.begin(), papers_.end(), std::back_inserter(kept),
               [&](const PaperRecord& p) { return p.year >= year_min && p.year <= year_max; });
  return Corpus(std::move(kept), institutions_, census_year_);
}

AttributionTable attribute_full_counting(const Corpus& corpus, const std::string& subject) {
  AttributionTable table;
  for (const auto& p : corpus.papers()) {
    if (!p.subject_areas.count(subject)) continue;
    for (const auto& inst : p.affiliations) table[inst].push_back(p.paper_id);
  }
  return table;
}

std::string ThresholdOutcome::diagnostic() const {
  if (accepted) return {};
  return "below min_institutions (" + std::to_string(n_surviving) + " < " + std::to_string(min_institutions) +
         "); " + std::to_string(n_institutions_before) + " institutions before the min_papers=" +
         std::to_string(min_papers) + " cut";
}

ThresholdOutcome apply_thresholds(const AttributionTable& table, std::size_t min_papers,
                                  std::size_t min_institutions) {
  if (min_papers < 1 || min_institutions < 1)
    throw std::invalid_argument("min_papers and min_institutions must be >= 1");
  ThresholdOutcome out;
  out.min_papers = min_papers;
  out.min_institutions = min_institutions;
  out.n_institutions_before = table.size();
  for (const auto& [inst, papers] : table) {
    if (papers.size() >= min_papers) out.table.emplace(inst, papers);
  }
  out.n_surviving = out.table.size();
  out.accepted = out.n_surviving >= min_institutions;
  return out;
}

}  // namespace excellence
