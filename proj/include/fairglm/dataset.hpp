#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairglm/csv.hpp"
#include "fairglm/errors.hpp"
#include "fairglm/family.hpp"
#include "fairglm/rng.hpp"

namespace fairglm {

enum class FeatureKind { continuous, categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
};

inline OutcomeType outcome_type_from_name(const std::string& s) {
  if (s == "binary") return OutcomeType::binary;
  if (s == "continuous") return OutcomeType::continuous;
  if (s == "count") return OutcomeType::count;
  if (s == "multiclass") return OutcomeType::multiclass;
  throw config_error("unknown outcome_type '" + s + "'");
}

inline std::string outcome_type_name(OutcomeType t) {
  switch (t) {
    case OutcomeType::binary: return "binary";
    case OutcomeType::continuous: return "continuous";
    case OutcomeType::count: return "count";
    case OutcomeType::multiclass: return "multiclass";
  }
  return "?";
}

// Names the outcome, the sensitive attribute, and the feature columns.
// The sensitive column is deliberately not a feature: the model never sees
// it, only the penalty and the metrics do.
struct DatasetSchema {
  std::string outcome;
  OutcomeType outcome_type = OutcomeType::binary;
  std::string sensitive;
  std::vector<FeatureSpec> features;
  std::optional<std::string> positive_label;  // binary convenience
  std::vector<std::string> class_labels;      // multiclass; first = reference

  void validate() const {
    if (outcome.empty()) throw config_error("schema: outcome column missing");
    if (sensitive.empty()) throw config_error("schema: sensitive column missing");
    if (features.empty()) throw config_error("schema: needs at least one feature");
    for (const auto& f : features) {
      if (f.name == sensitive)
        throw config_error("schema: sensitive column '" + sensitive +
                           "' must not be a feature");
      if (f.name == outcome)
        throw config_error("schema: outcome column '" + outcome +
                           "' must not be a feature");
    }
    std::set<std::string> seen;
    for (const auto& f : features)
      if (!seen.insert(f.name).second)
        throw config_error("schema: duplicate feature '" + f.name + "'");
    if (!class_labels.empty()) {
      if (outcome_type != OutcomeType::multiclass)
        throw config_error("schema: class_labels only apply to multiclass");
      if (class_labels.size() < 2)
        throw config_error("schema: class_labels needs at least 2 entries");
    }
    if (positive_label && outcome_type != OutcomeType::binary)
      throw config_error("schema: positive_label only applies to binary");
  }

  static DatasetSchema from_json(const nlohmann::json& j) {
    DatasetSchema s;
    try {
      s.outcome = j.at("outcome").get<std::string>();
      s.outcome_type = outcome_type_from_name(j.at("outcome_type").get<std::string>());
      s.sensitive = j.at("sensitive").get<std::string>();
      for (const auto& f : j.at("features")) {
        FeatureSpec spec;
        spec.name = f.at("name").get<std::string>();
        const std::string kind = f.at("kind").get<std::string>();
        if (kind == "continuous")
          spec.kind = FeatureKind::continuous;
        else if (kind == "categorical")
          spec.kind = FeatureKind::categorical;
        else
          throw config_error("schema: unknown feature kind '" + kind + "'");
        s.features.push_back(std::move(spec));
      }
      if (j.contains("positive_label"))
        s.positive_label = j.at("positive_label").get<std::string>();
      if (j.contains("class_labels"))
        s.class_labels = j.at("class_labels").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw config_error(std::string("schema: ") + e.what());
    }
    s.validate();
    return s;
  }

  static DatasetSchema from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open schema '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw config_error("schema '" + path + "': " + e.what());
    }
    return from_json(j);
  }
};

// Complete rows only, still in raw string form; encode() turns them numeric.
struct Dataset {
  DatasetSchema schema;
  std::vector<std::string> outcome_raw;
  std::vector<std::string> sensitive_raw;
  std::vector<std::vector<std::string>> feature_raw;  // n x features
  std::size_t dropped_rows = 0;

  std::size_t n() const { return outcome_raw.size(); }
};

namespace detail {

inline std::optional<double> parse_double(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return std::nullopt;
  const auto e = s.find_last_not_of(" \t");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str() + b, &end);
  if (end != s.c_str() + e + 1 || errno == ERANGE || !std::isfinite(v))
    return std::nullopt;
  return v;
}

inline double require_double(const std::string& s, const std::string& column,
                             std::size_t csv_line) {
  const auto v = parse_double(s);
  if (!v)
    throw data_error("line " + std::to_string(csv_line) + ": column '" + column +
                     "' value '" + s + "' is not numeric");
  return *v;
}

inline long long require_count(const std::string& s, const std::string& column,
                               std::size_t csv_line) {
  const double v = require_double(s, column, csv_line);
  if (v < 0 || v != std::floor(v))
    throw data_error("line " + std::to_string(csv_line) + ": column '" + column +
                     "' value '" + s + "' is not a non-negative integer");
  return static_cast<long long>(v);
}

// numeric outcome encoding from the raw label; csv_line only feeds messages
inline double parse_outcome(const DatasetSchema& schema, const std::string& raw,
                            std::size_t csv_line) {
  switch (schema.outcome_type) {
    case OutcomeType::binary: {
      if (schema.positive_label) return raw == *schema.positive_label ? 1.0 : 0.0;
      const double v = require_double(raw, schema.outcome, csv_line);
      if (v != 0.0 && v != 1.0)
        throw data_error("line " + std::to_string(csv_line) +
                         ": binary outcome '" + raw +
                         "' is not 0/1; set positive_label in the schema");
      return v;
    }
    case OutcomeType::continuous:
      return require_double(raw, schema.outcome, csv_line);
    case OutcomeType::count:
      return static_cast<double>(require_count(raw, schema.outcome, csv_line));
    case OutcomeType::multiclass: {
      if (!schema.class_labels.empty()) {
        const auto it = std::find(schema.class_labels.begin(),
                                  schema.class_labels.end(), raw);
        if (it == schema.class_labels.end())
          throw data_error("line " + std::to_string(csv_line) + ": class label '" +
                           raw + "' is not in schema class_labels");
        return static_cast<double>(it - schema.class_labels.begin());
      }
      return static_cast<double>(require_count(raw, schema.outcome, csv_line));
    }
  }
  throw config_error("unknown outcome type");
}

}  // namespace detail

// Reads a CSV against the schema.  Rows with any empty required field are
// dropped (counted); non-empty fields that fail to parse are hard errors
// naming the CSV line.
inline Dataset load_csv(const std::string& path, const DatasetSchema& schema) {
  schema.validate();
  const CsvTable table = read_csv(path);

  auto column_index = [&](const std::string& name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end())
      throw config_error("'" + path + "' has no column '" + name + "'");
    return static_cast<std::size_t>(it - table.header.begin());
  };

  const std::size_t outcome_col = column_index(schema.outcome);
  const std::size_t sensitive_col = column_index(schema.sensitive);
  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema.features) feature_cols.push_back(column_index(f.name));

  Dataset data;
  data.schema = schema;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t csv_line = r + 2;  // 1-based, after the header
    auto field = [&](std::size_t c) -> const std::string& {
      static const std::string empty;
      return c < row.size() ? row[c] : empty;
    };

    bool complete = !field(outcome_col).empty() && !field(sensitive_col).empty();
    for (std::size_t c : feature_cols) complete = complete && !field(c).empty();
    if (!complete) {
      ++data.dropped_rows;
      continue;
    }

    detail::parse_outcome(schema, field(outcome_col), csv_line);  // validate
    std::vector<std::string> feats;
    feats.reserve(schema.features.size());
    for (std::size_t i = 0; i < schema.features.size(); ++i) {
      const std::string& v = field(feature_cols[i]);
      if (schema.features[i].kind == FeatureKind::continuous)
        detail::require_double(v, schema.features[i].name, csv_line);
      feats.push_back(v);
    }
    data.outcome_raw.push_back(field(outcome_col));
    data.sensitive_raw.push_back(field(sensitive_col));
    data.feature_raw.push_back(std::move(feats));
  }
  if (data.n() == 0)
    throw data_error("'" + path + "' has no complete rows");
  return data;
}

struct SplitOptions {
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
  bool stratified = true;  // plain shuffle split when false
};

namespace detail {

inline Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.schema = data.schema;
  for (std::size_t i : idx) {
    out.outcome_raw.push_back(data.outcome_raw[i]);
    out.sensitive_raw.push_back(data.sensitive_raw[i]);
    out.feature_raw.push_back(data.feature_raw[i]);
  }
  return out;
}

// stratum key for the outcome: the label itself for discrete outcomes, a
// quartile bin for continuous ones
inline std::vector<std::string> outcome_strata(const Dataset& data) {
  const auto n = data.n();
  std::vector<std::string> key(n);
  if (data.schema.outcome_type != OutcomeType::continuous) {
    for (std::size_t i = 0; i < n; ++i) key[i] = data.outcome_raw[i];
    return key;
  }
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i)
    values[i] = *parse_double(data.outcome_raw[i]);
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (int q = 1; q < 4; ++q) cuts.push_back(sorted[n * q / 4]);
  for (std::size_t i = 0; i < n; ++i) {
    int bin = 0;
    for (double c : cuts) bin += values[i] >= c ? 1 : 0;
    key[i] = "q" + std::to_string(bin);
  }
  return key;
}

}  // namespace detail

// Deterministic train/test split.  Stratified mode stratifies jointly on
// (group, outcome key) with largest-remainder apportionment, then restores
// two-sided group coverage by swaps.  Groups with a single row always land
// in train.  Test size is lround(n * test_fraction).
inline std::pair<Dataset, Dataset> split(const Dataset& data,
                                         const SplitOptions& opt,
                                         std::vector<std::string>* warnings = nullptr) {
  if (opt.test_fraction < 0.0 || opt.test_fraction > 1.0)
    throw config_error("split: test_fraction must be in [0, 1]");
  const std::size_t n = data.n();
  const auto target =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * opt.test_fraction));

  auto warn = [&](const std::string& w) {
    if (warnings) warnings->push_back(w);
  };

  std::map<std::string, std::size_t> group_count;
  for (const auto& g : data.sensitive_raw) ++group_count[g];

  std::vector<char> in_test(n, 0);
  Rng rng(mix_seed(opt.seed));

  // rows whose group has a single member are pinned to train
  std::vector<char> pinned(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (group_count[data.sensitive_raw[i]] == 1) {
      pinned[i] = 1;
      warn("group '" + data.sensitive_raw[i] +
           "' has a single row; assigned to train");
    }
  }

  if (!opt.stratified) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < n; ++i)
      if (!pinned[i]) pool.push_back(i);
    rng.shuffle(pool);
    for (std::size_t i = 0; i < std::min(target, pool.size()); ++i)
      in_test[pool[i]] = 1;
  } else {
    // strata in deterministic (sorted key) order
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> strata;
    const auto okey = detail::outcome_strata(data);
    for (std::size_t i = 0; i < n; ++i)
      if (!pinned[i]) strata[{data.sensitive_raw[i], okey[i]}].push_back(i);

    struct Alloc {
      std::vector<std::size_t>* rows;
      std::size_t take;
      double remainder;
      std::size_t order;
    };
    std::vector<Alloc> allocs;
    std::size_t assigned = 0, order = 0;
    for (auto& [key, rows] : strata) {
      const double quota = static_cast<double>(rows.size()) * opt.test_fraction;
      const auto base = std::min(rows.size(),
                                 static_cast<std::size_t>(std::floor(quota)));
      allocs.push_back({&rows, base, quota - std::floor(quota), order++});
      assigned += base;
    }
    std::vector<std::size_t> by_rem(allocs.size());
    for (std::size_t i = 0; i < allocs.size(); ++i) by_rem[i] = i;
    std::sort(by_rem.begin(), by_rem.end(), [&](std::size_t a, std::size_t b) {
      if (allocs[a].remainder != allocs[b].remainder)
        return allocs[a].remainder > allocs[b].remainder;
      return allocs[a].order < allocs[b].order;
    });
    bool progress = true;
    while (assigned < target && progress) {
      progress = false;
      for (std::size_t i : by_rem) {
        if (assigned >= target) break;
        Alloc& a = allocs[i];
        if (a.take < a.rows->size()) {
          ++a.take;
          ++assigned;
          progress = true;
        }
      }
    }
    for (Alloc& a : allocs) {
      std::vector<std::size_t>& rows = *a.rows;
      rng.shuffle(rows);
      for (std::size_t i = 0; i < a.take; ++i) in_test[rows[i]] = 1;
    }

    // every group with >= 2 rows appears in both halves
    std::map<std::string, std::pair<std::size_t, std::size_t>> halves;
    for (std::size_t i = 0; i < n; ++i) {
      auto& h = halves[data.sensitive_raw[i]];
      if (in_test[i])
        ++h.second;
      else
        ++h.first;
    }
    auto first_row_of = [&](const std::string& g, bool test_half) {
      for (std::size_t i = 0; i < n; ++i)
        if (!pinned[i] && data.sensitive_raw[i] == g &&
            static_cast<bool>(in_test[i]) == test_half)
          return i;
      return n;
    };
    for (const auto& [g, count] : group_count) {
      if (count < 2) continue;
      auto& h = halves[g];
      for (const bool missing_test : {true, false}) {
        auto& have = missing_test ? h.second : h.first;
        if (have > 0) continue;
        // move one row of g into the empty half...
        const std::size_t mover = first_row_of(g, !missing_test);
        if (mover == n) continue;  // fully pinned
        // ...and rebalance with a row from the most-represented other group
        std::string donor;
        std::size_t donor_n = 1;
        for (const auto& [og, oh] : halves) {
          const std::size_t avail = missing_test ? oh.second : oh.first;
          if (og != g && avail > donor_n) {
            donor = og;
            donor_n = avail;
          }
        }
        in_test[mover] = missing_test ? 1 : 0;
        (missing_test ? h.second : h.first) += 1;
        (missing_test ? h.first : h.second) -= 1;
        if (!donor.empty()) {
          const std::size_t back = first_row_of(donor, missing_test);
          if (back != n) {
            in_test[back] = missing_test ? 0 : 1;
            auto& dh = halves[donor];
            (missing_test ? dh.second : dh.first) -= 1;
            (missing_test ? dh.first : dh.second) += 1;
          }
        } else {
          warn("group '" + g + "' coverage fix changed the split sizes");
        }
      }
    }
  }

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < n; ++i)
    (in_test[i] ? test_idx : train_idx).push_back(i);
  return {detail::take_rows(data, train_idx), detail::take_rows(data, test_idx)};
}

// ---- encoding ----

struct ContinuousEncoding {
  double mean = 0.0;
  double sd = 1.0;
  bool standardized = true;  // false: zero train variance, passed through
};

struct CategoricalEncoding {
  std::vector<std::string> levels;  // sorted; levels[0] is the reference
};

struct EncoderState {
  // per schema feature: index into continuous[] or categorical[]
  std::vector<std::pair<FeatureKind, std::size_t>> layout;
  std::vector<ContinuousEncoding> continuous;
  std::vector<CategoricalEncoding> categorical;
  std::vector<std::string> group_levels;    // sorted train levels
  std::vector<std::string> outcome_labels;  // multiclass; index = class
  std::vector<std::string> column_names;    // X columns incl. intercept
};

// Design matrix with a leading all-ones intercept column, numeric outcome,
// and group indices 0..K-1.
struct EncodedMatrix {
  Matrix X;
  Vector y;
  IntVector groups;
  EncoderState encoder_state;
  std::vector<std::string> warnings;

  int n_groups() const { return static_cast<int>(encoder_state.group_levels.size()); }
  int n_outcome_classes() const {
    return static_cast<int>(encoder_state.outcome_labels.size());
  }
};

namespace detail {

inline EncodedMatrix transform(const Dataset& data, const EncoderState& state) {
  const auto n = data.n();
  Eigen::Index cols = 1;
  for (const auto& [kind, idx] : state.layout)
    cols += kind == FeatureKind::continuous
                ? 1
                : static_cast<Eigen::Index>(state.categorical[idx].levels.size()) - 1;

  EncodedMatrix out;
  out.encoder_state = state;
  out.X = Matrix::Zero(n, cols);
  out.X.col(0).setOnes();
  out.y.resize(n);
  out.groups.resize(n);

  std::set<std::string> unseen_levels;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Index col = 1;
    for (std::size_t f = 0; f < state.layout.size(); ++f) {
      const auto& [kind, idx] = state.layout[f];
      const std::string& raw = data.feature_raw[i][f];
      if (kind == FeatureKind::continuous) {
        const auto& enc = state.continuous[idx];
        const double v = *parse_double(raw);
        out.X(i, col) = enc.standardized ? (v - enc.mean) / enc.sd : v;
        ++col;
      } else {
        const auto& levels = state.categorical[idx].levels;
        const auto it = std::find(levels.begin(), levels.end(), raw);
        if (it == levels.end())
          unseen_levels.insert(data.schema.features[f].name + "=" + raw);
        else if (it != levels.begin())
          out.X(i, col + (it - levels.begin()) - 1) = 1.0;
        col += static_cast<Eigen::Index>(levels.size()) - 1;
      }
    }

    const auto git = std::find(state.group_levels.begin(),
                               state.group_levels.end(), data.sensitive_raw[i]);
    if (git == state.group_levels.end())
      throw data_error("group level '" + data.sensitive_raw[i] +
                       "' does not occur in the training data");
    out.groups(i) = static_cast<int>(git - state.group_levels.begin());

    if (data.schema.outcome_type == OutcomeType::multiclass &&
        data.schema.class_labels.empty()) {
      const double v = parse_outcome(data.schema, data.outcome_raw[i], i + 2);
      if (v >= static_cast<double>(state.outcome_labels.size()))
        throw data_error("class " + data.outcome_raw[i] +
                         " does not occur in the training data");
      out.y(i) = v;
    } else {
      out.y(i) = parse_outcome(data.schema, data.outcome_raw[i], i + 2);
    }
  }
  for (const auto& lv : unseen_levels)
    out.warnings.push_back("level '" + lv +
                           "' unseen in training; encoded as the reference");
  return out;
}

}  // namespace detail

// Fits the encoder on train only (standardization moments, category
// dictionaries, group levels), then transforms both halves with it.
inline std::pair<EncodedMatrix, EncodedMatrix> encode(const Dataset& train,
                                                      const Dataset& test) {
  train.schema.validate();
  if (train.n() == 0) throw data_error("encode: empty training data");

  EncoderState state;
  std::vector<std::string> fit_warnings;

  for (std::size_t f = 0; f < train.schema.features.size(); ++f) {
    const auto& spec = train.schema.features[f];
    if (spec.kind == FeatureKind::continuous) {
      double sum = 0.0;
      for (std::size_t i = 0; i < train.n(); ++i)
        sum += *detail::parse_double(train.feature_raw[i][f]);
      const double mean = sum / static_cast<double>(train.n());
      double ss = 0.0;
      for (std::size_t i = 0; i < train.n(); ++i) {
        const double d = *detail::parse_double(train.feature_raw[i][f]) - mean;
        ss += d * d;
      }
      ContinuousEncoding enc;
      enc.mean = mean;
      enc.sd = train.n() > 1 ? std::sqrt(ss / static_cast<double>(train.n() - 1)) : 0.0;
      if (enc.sd == 0.0) {
        enc.standardized = false;
        enc.sd = 1.0;
        fit_warnings.push_back("column '" + spec.name +
                               "' has zero variance; left unstandardized");
      }
      state.layout.emplace_back(FeatureKind::continuous, state.continuous.size());
      state.continuous.push_back(enc);
    } else {
      std::set<std::string> levels;
      for (std::size_t i = 0; i < train.n(); ++i)
        levels.insert(train.feature_raw[i][f]);
      CategoricalEncoding enc;
      enc.levels.assign(levels.begin(), levels.end());
      if (enc.levels.size() == 1)
        fit_warnings.push_back("column '" + spec.name +
                               "' has a single level; contributes no columns");
      state.layout.emplace_back(FeatureKind::categorical, state.categorical.size());
      state.categorical.push_back(enc);
    }
  }

  {
    std::set<std::string> groups(train.sensitive_raw.begin(),
                                 train.sensitive_raw.end());
    state.group_levels.assign(groups.begin(), groups.end());
    if (state.group_levels.size() < 2)
      throw data_error("encode: training data has fewer than 2 groups");
  }

  if (train.schema.outcome_type == OutcomeType::multiclass) {
    if (!train.schema.class_labels.empty()) {
      state.outcome_labels = train.schema.class_labels;
    } else {
      long long max_class = 0;
      for (std::size_t i = 0; i < train.n(); ++i)
        max_class = std::max(
            max_class, static_cast<long long>(
                           detail::parse_outcome(train.schema,
                                                 train.outcome_raw[i], i + 2)));
      for (long long c = 0; c <= max_class; ++c)
        state.outcome_labels.push_back(std::to_string(c));
    }
    std::vector<char> seen(state.outcome_labels.size(), 0);
    for (std::size_t i = 0; i < train.n(); ++i)
      seen[static_cast<std::size_t>(
          detail::parse_outcome(train.schema, train.outcome_raw[i], i + 2))] = 1;
    for (std::size_t c = 0; c < seen.size(); ++c)
      if (!seen[c])
        fit_warnings.push_back("class '" + state.outcome_labels[c] +
                               "' absent from training data");
  }

  state.column_names.push_back("(intercept)");
  for (std::size_t f = 0; f < train.schema.features.size(); ++f) {
    const auto& spec = train.schema.features[f];
    const auto& [kind, idx] = state.layout[f];
    if (kind == FeatureKind::continuous) {
      state.column_names.push_back(spec.name);
    } else {
      const auto& levels = state.categorical[idx].levels;
      for (std::size_t l = 1; l < levels.size(); ++l)
        state.column_names.push_back(spec.name + "=" + levels[l]);
    }
  }

  EncodedMatrix train_m = detail::transform(train, state);
  EncodedMatrix test_m = detail::transform(test, state);
  train_m.warnings.insert(train_m.warnings.begin(), fit_warnings.begin(),
                          fit_warnings.end());
  return {std::move(train_m), std::move(test_m)};
}

// Raw feature values reconstructed from one encoded row; numeric for
// continuous features (exact up to standardization rounding), the level
// string for categorical ones.
struct DecodedRow {
  std::vector<double> continuous;
  std::vector<std::string> categorical;
};

inline DecodedRow decode_row(const EncodedMatrix& m, Eigen::Index row) {
  DecodedRow out;
  const EncoderState& state = m.encoder_state;
  Eigen::Index col = 1;
  for (const auto& [kind, idx] : state.layout) {
    if (kind == FeatureKind::continuous) {
      const auto& enc = state.continuous[idx];
      const double v = m.X(row, col);
      out.continuous.push_back(enc.standardized ? v * enc.sd + enc.mean : v);
      ++col;
    } else {
      const auto& levels = state.categorical[idx].levels;
      std::size_t which = 0;
      for (std::size_t l = 1; l < levels.size(); ++l)
        if (m.X(row, col + static_cast<Eigen::Index>(l) - 1) == 1.0) which = l;
      out.categorical.push_back(levels[which]);
      col += static_cast<Eigen::Index>(levels.size()) - 1;
    }
  }
  return out;
}

}  // namespace fairglm
