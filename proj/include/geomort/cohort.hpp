#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace geomort {

// US Bureau of Economic Analysis region codebook.
inline constexpr int kRegionCount = 8;
const char* region_name(int region);  // 1..8

struct CountyRecord {
  std::string fips;
  std::string name;
  std::int64_t population = 0;
  std::int64_t deaths = 0;
  int region = 0;  // 1..8
  double prop_white = 0.0;
  double prop_black = 0.0;
  double prop_asian = 0.0;
  double prop_hispanic = 0.0;
  double prop_male = 0.0;
  double mean_age = 0.0;
  double any_college = 0.0;  // NaN when missing before imputation
  double income = 0.0;       // NaN when missing before imputation
  int year = 2015;
};

// Deaths per 1,000 persons.
double crude_rate(std::int64_t deaths, std::int64_t population);
double crude_rate(const CountyRecord& rec);

struct LoadOptions {
  // FIPS codes to drop at ingestion. Exists so upstream data-cleaning rules
  // (e.g. records excluded before mortality calculations) stay caller policy
  // instead of being baked in here.
  std::set<std::string> exclude_fips;
};

// County CSV contract:
// fips,name,population,deaths,region,prop_white,prop_black,prop_asian,
// prop_hispanic,prop_male,mean_age,any_college,income
// Empty any_college/income fields load as NaN. Malformed rows throw
// IngestError with the 1-based row number.
std::vector<CountyRecord> read_counties(std::istream& in, const LoadOptions& opts = {});
std::vector<CountyRecord> read_counties_file(const std::string& path,
                                             const LoadOptions& opts = {});
void write_counties(std::ostream& out, const std::vector<CountyRecord>& recs);

struct ImputeResult {
  std::vector<CountyRecord> records;
  int imputed_any_college = 0;
  int imputed_income = 0;
};

// Replaces missing any_college/income with the median over non-missing
// counties. A field missing everywhere is a DomainError.
ImputeResult impute_missing(const std::vector<CountyRecord>& records);

struct BinPlan {
  std::vector<std::vector<std::string>> bins;      // 13 bins of fips, rate-ordered
  std::vector<std::vector<std::string>> selected;  // up to 40 per bin
  std::vector<std::string> all_selected() const;
};

inline constexpr int kMortalityBins = 13;
inline constexpr int kMaxPerBin = 40;
inline constexpr int kPopulousCountyPool = 1000;

// Selection procedure: keep the kPopulousCountyPool most populous counties,
// rank by crude rate, cut into 13 near-equal bins (remainder goes to the
// lowest-rate bins), then keep the up-to-40 most populous per bin. All order
// ties break by ascending FIPS, so the plan is invariant to input order.
BinPlan select_counties(const std::vector<CountyRecord>& records);

enum class SplitLabel { kTrain, kValidation, kTest };
const char* split_label_name(SplitLabel label);

struct SplitAssignment {
  std::map<std::string, SplitLabel> labels;  // fips -> label

  std::vector<std::string> with_label(SplitLabel label) const;
};

// Seeded 65/15/20 partition. Counts are fixed by integer arithmetic:
// train = 65n/100, validation = (15n + 50)/100, test = remainder, which
// reproduces 279/65/86 at n = 430.
SplitAssignment split(const BinPlan& plan, std::uint64_t seed);

void write_split(std::ostream& out, const SplitAssignment& split);
SplitAssignment read_split(std::istream& in);

}  // namespace geomort
