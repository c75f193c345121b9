#include "elinspect/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "elinspect/errors.hpp"
#include "elinspect/rng.hpp"

namespace elinspect {

namespace {

constexpr std::array<double, 4> kLegalP = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};

int p_level(double p) {
  for (int i = 0; i < 4; ++i)
    if (p == kLegalP[static_cast<std::size_t>(i)]) return i;
  throw DataError("illegal defect probability: " + std::to_string(p));
}

// Stratum key: mono before poly, ascending p within each wafer type.
int stratum_key(const LabeledSample& s) {
  return (s.record.wafer == Wafer::mono ? 0 : 4) + p_level(s.record.p);
}

std::vector<std::vector<std::size_t>> group_by_stratum(const std::vector<LabeledSample>& samples) {
  std::vector<std::vector<std::size_t>> strata(8);
  for (std::size_t i = 0; i < samples.size(); ++i)
    strata[static_cast<std::size_t>(stratum_key(samples[i]))].push_back(i);
  return strata;
}

// Largest-remainder apportionment of `total` across strata with the given
// sizes; ties broken by stratum order.
std::vector<std::size_t> apportion(const std::vector<std::vector<std::size_t>>& strata,
                                   double fraction, std::size_t total) {
  std::vector<std::size_t> quota(strata.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const double exact = fraction * static_cast<double>(strata[s].size());
    quota[s] = static_cast<std::size_t>(std::floor(exact));
    quota[s] = std::min(quota[s], strata[s].size());
    assigned += quota[s];
    if (!strata[s].empty()) remainders.emplace_back(exact - std::floor(exact), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [rem, s] : remainders) {
    if (assigned >= total) break;
    if (quota[s] < strata[s].size()) {
      ++quota[s];
      ++assigned;
    }
  }
  return quota;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::string normalized = line;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  std::vector<std::string> fields;
  std::string f;
  while (in >> f) fields.push_back(f);
  return fields;
}

}  // namespace

const char* to_string(Wafer w) { return w == Wafer::mono ? "mono" : "poly"; }

std::vector<CellRecord> load_index(const std::filesystem::path& index_file) {
  std::ifstream in(index_file);
  if (!in) throw DataError("cannot open index file: " + index_file.string());

  std::vector<CellRecord> records;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw DataError(index_file.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    const auto fields = split_fields(line);
    if (fields.size() != 3) fail("expected 3 fields (path probability wafer), got " + std::to_string(fields.size()));

    CellRecord rec;
    rec.image_path = fields[0];

    double raw = 0.0;
    try {
      std::size_t pos = 0;
      raw = std::stod(fields[1], &pos);
      if (pos != fields[1].size()) fail("malformed probability '" + fields[1] + "'");
    } catch (const std::exception&) {
      fail("malformed probability '" + fields[1] + "'");
    }
    double best = kLegalP[0];
    double best_dist = std::abs(raw - kLegalP[0]);
    for (double legal : kLegalP) {
      const double d = std::abs(raw - legal);
      if (d < best_dist) {
        best_dist = d;
        best = legal;
      }
    }
    if (best_dist > 1e-3) fail("probability " + fields[1] + " is not near any of {0, 1/3, 2/3, 1}");
    rec.p = best;

    if (fields[2] == "mono") {
      rec.wafer = Wafer::mono;
    } else if (fields[2] == "poly") {
      rec.wafer = Wafer::poly;
    } else {
      fail("unknown wafer type '" + fields[2] + "'");
    }
    records.push_back(std::move(rec));
  }

  // Paths must be unique within an index.
  std::vector<std::string> paths;
  paths.reserve(records.size());
  for (const auto& r : records) {
    if (r.image_path.empty()) throw DataError("empty image path in " + index_file.string());
    paths.push_back(r.image_path);
  }
  std::sort(paths.begin(), paths.end());
  const auto dup = std::adjacent_find(paths.begin(), paths.end());
  if (dup != paths.end()) throw DataError("duplicate image path in index: " + *dup);

  return records;
}

LabeledSample to_labeled(const CellRecord& record) {
  LabeledSample s;
  s.record = record;
  switch (p_level(record.p)) {
    case 0: s.y = Label::functional; s.w = 1.0; break;
    case 1: s.y = Label::defective; s.w = 0.33; break;
    case 2: s.y = Label::defective; s.w = 0.67; break;
    default: s.y = Label::defective; s.w = 1.0; break;
  }
  return s;
}

std::vector<LabeledSample> to_labeled(const std::vector<CellRecord>& records) {
  std::vector<LabeledSample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(to_labeled(r));
  return out;
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>>
stratified_split(const std::vector<LabeledSample>& samples, const SplitSpec& spec) {
  if (spec.test_fraction <= 0.0 || spec.test_fraction >= 1.0)
    throw ConfigError("test_fraction must lie in (0,1)");

  const auto strata = group_by_stratum(samples);
  for (const auto& stratum : strata)
    if (!stratum.empty() && stratum.size() < 2)
      throw DataError("stratum with fewer than 2 samples cannot be split");

  const auto total_test =
      static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(samples.size())));
  const auto quota = apportion(strata, spec.test_fraction, total_test);

  std::vector<char> is_test(samples.size(), 0);
  Rng rng(spec.seed);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto members = strata[s];
    rng.shuffle(members);
    for (std::size_t k = 0; k < quota[s]; ++k) is_test[members[k]] = 1;
  }

  std::vector<LabeledSample> train, test;
  for (std::size_t i = 0; i < samples.size(); ++i)
    (is_test[i] ? test : train).push_back(samples[i]);
  return {std::move(train), std::move(test)};
}

ClassWeights class_weights(const std::vector<LabeledSample>& train) {
  std::size_t n_functional = 0, n_defective = 0;
  for (const auto& s : train) (s.y == Label::functional ? n_functional : n_defective)++;
  if (n_functional == 0 || n_defective == 0)
    throw DataError("class_weights requires both classes in the training set");
  const double S = static_cast<double>(train.size());
  return {S / (2.0 * static_cast<double>(n_functional)),
          S / (2.0 * static_cast<double>(n_defective))};
}

std::vector<LabeledSample> stratified_subsample(const std::vector<LabeledSample>& train,
                                                double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0) throw ConfigError("subsample fraction must lie in (0,1]");
  if (fraction == 1.0) return train;

  const auto strata = group_by_stratum(train);
  for (const auto& stratum : strata)
    if (!stratum.empty() && stratum.size() < 2)
      throw DataError("stratum with fewer than 2 samples cannot be subsampled");

  const auto total =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train.size())));
  const auto quota = apportion(strata, fraction, total);

  std::vector<char> keep(train.size(), 0);
  Rng rng(seed);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto members = strata[s];
    rng.shuffle(members);
    for (std::size_t k = 0; k < quota[s]; ++k) keep[members[k]] = 1;
  }
  std::vector<LabeledSample> out;
  out.reserve(total);
  for (std::size_t i = 0; i < train.size(); ++i)
    if (keep[i]) out.push_back(train[i]);
  return out;
}

void write_split_manifest(const std::filesystem::path& file,
                          const std::vector<LabeledSample>& train,
                          const std::vector<LabeledSample>& test) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write split manifest: " + file.string());
  out << "path,p,wafer,assignment\n";
  auto emit = [&](const std::vector<LabeledSample>& part, const char* tag) {
    char buf[32];
    for (const auto& s : part) {
      std::snprintf(buf, sizeof(buf), "%.16g", s.record.p);
      out << s.record.image_path << ',' << buf << ',' << to_string(s.record.wafer) << ',' << tag
          << '\n';
    }
  };
  emit(train, "train");
  emit(test, "test");
  if (!out) throw DataError("failed writing split manifest: " + file.string());
}

}  // namespace elinspect
