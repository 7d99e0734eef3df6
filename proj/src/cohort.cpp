#include "geomort/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "geomort/csv.hpp"
#include "geomort/error.hpp"
#include "geomort/rng.hpp"

namespace geomort {

namespace {

const char* kRegionNames[kRegionCount] = {"New England",    "Mideast",
                                          "Great Lakes",    "Plains",
                                          "Southeast",      "Southwest",
                                          "Rocky Mountains", "Far West"};

const std::vector<std::string> kCountyHeader = {
    "fips",       "name",       "population",    "deaths",    "region",
    "prop_white", "prop_black", "prop_asian",    "prop_hispanic",
    "prop_male",  "mean_age",   "any_college",   "income"};

double parse_double(const std::string& s, long row, const char* field) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing chars");
    return v;
  } catch (const std::exception&) {
    throw IngestError(row, std::string("bad numeric value for ") + field + ": '" + s + "'");
  }
}

std::int64_t parse_int(const std::string& s, long row, const char* field) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing chars");
    return v;
  } catch (const std::exception&) {
    throw IngestError(row, std::string("bad integer value for ") + field + ": '" + s + "'");
  }
}

double parse_optional(const std::string& s, long row, const char* field) {
  if (s.empty() || s == "NA" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return parse_double(s, row, field);
}

void check_fraction(double v, long row, const char* field) {
  if (std::isnan(v)) return;
  if (!(v >= 0.0 && v <= 1.0))
    throw IngestError(row, std::string(field) + " outside [0,1]");
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

const char* region_name(int region) {
  if (region < 1 || region > kRegionCount) throw DomainError("region must be in 1..8");
  return kRegionNames[region - 1];
}

double crude_rate(std::int64_t deaths, std::int64_t population) {
  if (population <= 0) throw DomainError("population must be positive");
  if (deaths < 0 || deaths > population)
    throw DomainError("deaths must be in [0, population]");
  return 1000.0 * static_cast<double>(deaths) / static_cast<double>(population);
}

double crude_rate(const CountyRecord& rec) { return crude_rate(rec.deaths, rec.population); }

std::vector<CountyRecord> read_counties(std::istream& in, const LoadOptions& opts) {
  std::vector<std::string> header;
  const auto rows = read_csv(in, &header);
  if (header != kCountyHeader) {
    std::string want;
    for (const auto& h : kCountyHeader) want += (want.empty() ? "" : ",") + h;
    throw IngestError(1, "county CSV header must be exactly: " + want);
  }
  std::vector<CountyRecord> recs;
  recs.reserve(rows.size());
  std::set<std::string> seen;
  long row_no = 1;
  for (const auto& r : rows) {
    ++row_no;
    if (r.size() != kCountyHeader.size())
      throw IngestError(row_no, "expected 13 fields, got " + std::to_string(r.size()));
    CountyRecord rec;
    rec.fips = r[0];
    rec.name = r[1];
    if (rec.fips.empty()) throw IngestError(row_no, "empty fips");
    if (!seen.insert(rec.fips).second)
      throw IngestError(row_no, "duplicate fips " + rec.fips);
    rec.population = parse_int(r[2], row_no, "population");
    rec.deaths = parse_int(r[3], row_no, "deaths");
    rec.region = static_cast<int>(parse_int(r[4], row_no, "region"));
    rec.prop_white = parse_double(r[5], row_no, "prop_white");
    rec.prop_black = parse_double(r[6], row_no, "prop_black");
    rec.prop_asian = parse_double(r[7], row_no, "prop_asian");
    rec.prop_hispanic = parse_double(r[8], row_no, "prop_hispanic");
    rec.prop_male = parse_double(r[9], row_no, "prop_male");
    rec.mean_age = parse_double(r[10], row_no, "mean_age");
    rec.any_college = parse_optional(r[11], row_no, "any_college");
    rec.income = parse_optional(r[12], row_no, "income");

    if (rec.population <= 0) throw IngestError(row_no, "population must be positive");
    if (rec.deaths < 0 || rec.deaths > rec.population)
      throw IngestError(row_no, "deaths outside [0, population]");
    if (rec.region < 1 || rec.region > kRegionCount)
      throw IngestError(row_no, "region outside 1..8");
    check_fraction(rec.prop_white, row_no, "prop_white");
    check_fraction(rec.prop_black, row_no, "prop_black");
    check_fraction(rec.prop_asian, row_no, "prop_asian");
    check_fraction(rec.prop_hispanic, row_no, "prop_hispanic");
    check_fraction(rec.prop_male, row_no, "prop_male");
    check_fraction(rec.any_college, row_no, "any_college");

    if (opts.exclude_fips.count(rec.fips)) continue;
    recs.push_back(std::move(rec));
  }
  return recs;
}

std::vector<CountyRecord> read_counties_file(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open county CSV: " + path);
  return read_counties(in, opts);
}

void write_counties(std::ostream& out, const std::vector<CountyRecord>& recs) {
  write_csv_row(out, kCountyHeader);
  char buf[64];
  for (const auto& r : recs) {
    std::vector<std::string> f;
    f.push_back(r.fips);
    f.push_back(r.name);
    f.push_back(std::to_string(r.population));
    f.push_back(std::to_string(r.deaths));
    f.push_back(std::to_string(r.region));
    const double vals[] = {r.prop_white, r.prop_black,    r.prop_asian,
                           r.prop_hispanic, r.prop_male,  r.mean_age,
                           r.any_college,   r.income};
    for (double v : vals) {
      if (std::isnan(v)) {
        f.emplace_back();
      } else {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        f.emplace_back(buf);
      }
    }
    write_csv_row(out, f);
  }
}

ImputeResult impute_missing(const std::vector<CountyRecord>& records) {
  std::vector<double> college, income;
  for (const auto& r : records) {
    if (!std::isnan(r.any_college)) college.push_back(r.any_college);
    if (!std::isnan(r.income)) income.push_back(r.income);
  }
  ImputeResult res;
  res.records = records;
  bool need_college = false, need_income = false;
  for (const auto& r : records) {
    need_college |= std::isnan(r.any_college);
    need_income |= std::isnan(r.income);
  }
  if (need_college && college.empty())
    throw DomainError("any_college missing for every county; cannot impute");
  if (need_income && income.empty())
    throw DomainError("income missing for every county; cannot impute");
  const double college_med = college.empty() ? 0.0 : median_of(college);
  const double income_med = income.empty() ? 0.0 : median_of(income);
  for (auto& r : res.records) {
    if (std::isnan(r.any_college)) {
      r.any_college = college_med;
      ++res.imputed_any_college;
    }
    if (std::isnan(r.income)) {
      r.income = income_med;
      ++res.imputed_income;
    }
  }
  return res;
}

std::vector<std::string> BinPlan::all_selected() const {
  std::vector<std::string> out;
  for (const auto& bin : selected) out.insert(out.end(), bin.begin(), bin.end());
  return out;
}

BinPlan select_counties(const std::vector<CountyRecord>& records) {
  if (records.size() < static_cast<std::size_t>(kMortalityBins))
    throw DomainError("need at least 13 counties to build mortality bins");

  // Most populous pool first.
  std::vector<const CountyRecord*> pool;
  pool.reserve(records.size());
  for (const auto& r : records) pool.push_back(&r);
  std::sort(pool.begin(), pool.end(), [](const CountyRecord* a, const CountyRecord* b) {
    if (a->population != b->population) return a->population > b->population;
    return a->fips < b->fips;
  });
  if (pool.size() > static_cast<std::size_t>(kPopulousCountyPool))
    pool.resize(kPopulousCountyPool);

  // Rank by crude rate, then population, then fips.
  std::sort(pool.begin(), pool.end(), [](const CountyRecord* a, const CountyRecord* b) {
    const double ra = crude_rate(*a), rb = crude_rate(*b);
    if (ra != rb) return ra < rb;
    if (a->population != b->population) return a->population < b->population;
    return a->fips < b->fips;
  });

  const std::size_t n = pool.size();
  const std::size_t base = n / kMortalityBins;
  const std::size_t rem = n % kMortalityBins;

  BinPlan plan;
  plan.bins.resize(kMortalityBins);
  plan.selected.resize(kMortalityBins);
  std::size_t idx = 0;
  for (int b = 0; b < kMortalityBins; ++b) {
    const std::size_t size = base + (static_cast<std::size_t>(b) < rem ? 1 : 0);
    std::vector<const CountyRecord*> bin(pool.begin() + idx, pool.begin() + idx + size);
    idx += size;
    for (const auto* r : bin) plan.bins[b].push_back(r->fips);

    std::sort(bin.begin(), bin.end(), [](const CountyRecord* a, const CountyRecord* b2) {
      if (a->population != b2->population) return a->population > b2->population;
      return a->fips < b2->fips;
    });
    const std::size_t take = std::min<std::size_t>(bin.size(), kMaxPerBin);
    for (std::size_t i = 0; i < take; ++i) plan.selected[b].push_back(bin[i]->fips);
    std::sort(plan.selected[b].begin(), plan.selected[b].end());
  }
  return plan;
}

const char* split_label_name(SplitLabel label) {
  switch (label) {
    case SplitLabel::kTrain: return "train";
    case SplitLabel::kValidation: return "validation";
    case SplitLabel::kTest: return "test";
  }
  return "?";
}

std::vector<std::string> SplitAssignment::with_label(SplitLabel label) const {
  std::vector<std::string> out;
  for (const auto& [fips, l] : labels)
    if (l == label) out.push_back(fips);
  return out;
}

SplitAssignment split(const BinPlan& plan, std::uint64_t seed) {
  std::vector<std::string> fips = plan.all_selected();
  if (fips.empty()) throw DomainError("empty bin plan");
  std::sort(fips.begin(), fips.end());

  const std::uint64_t n = fips.size();
  const std::uint64_t n_train = 65 * n / 100;
  const std::uint64_t n_val = (15 * n + 50) / 100;

  CounterRng rng(mix64(seed ^ 0x9E3779B97F4A7C15ULL));
  rng.shuffle(fips);

  SplitAssignment out;
  for (std::uint64_t i = 0; i < n; ++i) {
    SplitLabel l = SplitLabel::kTest;
    if (i < n_train) l = SplitLabel::kTrain;
    else if (i < n_train + n_val) l = SplitLabel::kValidation;
    out.labels[fips[i]] = l;
  }
  return out;
}

void write_split(std::ostream& out, const SplitAssignment& split) {
  out << "fips,label\n";
  for (const auto& [fips, label] : split.labels)
    out << csv_quote(fips) << ',' << split_label_name(label) << '\n';
}

SplitAssignment read_split(std::istream& in) {
  std::vector<std::string> header;
  const auto rows = read_csv(in, &header);
  if (header != std::vector<std::string>{"fips", "label"})
    throw IngestError(1, "split CSV header must be fips,label");
  SplitAssignment out;
  long row_no = 1;
  for (const auto& r : rows) {
    ++row_no;
    if (r.size() != 2) throw IngestError(row_no, "expected 2 fields");
    SplitLabel l;
    if (r[1] == "train") l = SplitLabel::kTrain;
    else if (r[1] == "validation") l = SplitLabel::kValidation;
    else if (r[1] == "test") l = SplitLabel::kTest;
    else throw IngestError(row_no, "unknown split label '" + r[1] + "'");
    if (!out.labels.emplace(r[0], l).second)
      throw IngestError(row_no, "duplicate fips " + r[0]);
  }
  return out;
}

}  // namespace geomort
