/*
 * Copyright 2026 The EACS Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "eacs/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "eacs/csv.hpp"
#include "eacs/error.hpp"

namespace eacs {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::string trimmed = boost::algorithm::trim_copy(text);
  if (trimmed.empty()) return parts;
  boost::algorithm::split(parts, trimmed, boost::algorithm::is_any_of(","));
  for (auto& s : parts) boost::algorithm::trim(s);
  return parts;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("config " + key + ": '" + s + "' is not a number");
  }
}

long long to_integer(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("config " + key + ": '" + s + "' is not an integer");
  }
}

bool to_bool(const std::string& key, const std::string& s) {
  const std::string v = boost::algorithm::to_lower_copy(s);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument("config " + key + ": '" + s + "' is not a boolean");
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += v[i];
    } else if constexpr (std::is_floating_point_v<T>) {
      out += format_double(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

// Binds INI keys to config fields in both directions.
class Binder {
 public:
  explicit Binder(ExperimentConfig& cfg) : c_(cfg) {
    bind_int("dgp.envs_per_type", c_.dgp.envs_per_type);
    bind_int("dgp.samples", c_.dgp.samples);
    bind_double("dgp.sigma", c_.dgp.sigma);
    bind_double("dgp.sigma_test", c_.dgp.sigma_test);
    bind_double("dgp.max_level", c_.dgp.max_level);
    bind_doubles("dgp.level_grid", c_.dgp.level_grid);
    bind_int("dgp.test_envs_per_type", c_.dgp.test_envs_per_type);
    bind_int("dgp.test_samples", c_.dgp.test_samples);

    auto& t = c_.selector.train;
    add("selector.kind", [&t] { return to_string(t.kind); },
        [&t](const std::string&, const std::string& v) { t.kind = parse_selector_kind(v); });
    add("selector.rule", [&t] { return to_string(t.rule); },
        [&t](const std::string&, const std::string& v) { t.rule = parse_prediction_rule(v); });
    bind_double("selector.l2_penalty", t.l2_penalty);
    bind_double("selector.learning_rate", t.learning_rate);
    bind_int("selector.max_epochs", t.max_epochs);
    bind_ints("selector.hidden_sizes", t.hidden_sizes);
    bind_u64("selector.seed", t.seed);
    bind_ints("selector.constraint", c_.selector.constraint);
    bind_bool("selector.run_constrained", c_.selector.run_constrained);

    auto& s = c_.selector.summary;
    bind_bool("summary.include_means", s.include_means);
    bind_bool("summary.include_sds", s.include_sds);
    bind_bool("summary.include_pairwise_corr", s.include_pairwise_corr);
    bind_bool("summary.include_partial_corr", s.include_partial_corr);
    bind_double("summary.shrinkage_alpha_max", s.shrinkage_alpha_max);
    bind_bool("summary.standardize_across_envs", s.standardize_across_envs);
    bind_strings("summary.keep_features", s.keep_features, ";");

    bind_strings("sweep.conditions", c_.sweep.conditions);
    bind_ints("sweep.envs_per_type", c_.sweep.envs_per_type);
    bind_ints("sweep.samples", c_.sweep.samples);
    bind_doubles("sweep.sigmas", c_.sweep.sigmas);
    bind_strings("sweep.summary_variants", c_.sweep.summary_variants);
    bind_doubles("sweep.coverage", c_.sweep.coverage);

    bind_doubles("crossover.deltas", c_.crossover.deltas);
    bind_int("crossover.train_envs", c_.crossover.train_envs);
    bind_int("crossover.train_samples", c_.crossover.train_samples);
    bind_int("crossover.test_samples", c_.crossover.test_samples);

    bind_doubles("baselines.lasso_grid", c_.baselines.lasso_grid);
    bind_doubles("baselines.anchor_grid", c_.baselines.anchor_grid);
    bind_doubles("baselines.icp_grid", c_.baselines.icp_grid);
    bind_int("baselines.folds", c_.baselines.folds);

    bind_int("run.replications", c_.run.replications);
    bind_u64("run.base_seed", c_.run.base_seed);
    add("run.output_dir", [this] { return c_.run.output_dir; },
        [this](const std::string&, const std::string& v) { c_.run.output_dir = v; });
    bind_int("run.threads", c_.run.threads);
  }

  void read(const pt::ptree& tree) {
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty()) {
        throw InvalidArgument("config: key '" + section + "' outside a section");
      }
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        auto it = entries_.find(full);
        if (it == entries_.end()) throw InvalidArgument("config: unknown key '" + full + "'");
        it->second.set(full, boost::algorithm::trim_copy(value.data()));
      }
    }
  }

  void write(std::ostream& out) const {
    std::string current;
    for (const auto& key : order_) {
      const auto dot = key.find('.');
      const std::string section = key.substr(0, dot);
      if (section != current) {
        if (!current.empty()) out << "\n";
        out << "[" << section << "]\n";
        current = section;
      }
      out << key.substr(dot + 1) << " = " << entries_.at(key).get() << "\n";
    }
  }

 private:
  struct Entry {
    std::function<std::string()> get;
    std::function<void(const std::string&, const std::string&)> set;
  };

  void add(const std::string& key, std::function<std::string()> get,
           std::function<void(const std::string&, const std::string&)> set) {
    entries_.emplace(key, Entry{std::move(get), std::move(set)});
    order_.push_back(key);
  }
  void bind_int(const std::string& key, int& field) {
    add(key, [&field] { return std::to_string(field); },
        [&field](const std::string& k, const std::string& v) {
          field = static_cast<int>(to_integer(k, v));
        });
  }
  void bind_u64(const std::string& key, std::uint64_t& field) {
    add(key, [&field] { return std::to_string(field); },
        [&field](const std::string& k, const std::string& v) {
          if (v.empty() || v.front() == '-' || v.front() == '+') {
            throw InvalidArgument("config " + k + ": '" + v + "' is not an unsigned integer");
          }
          try {
            std::size_t pos = 0;
            field = std::stoull(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
          } catch (const std::exception&) {
            throw InvalidArgument("config " + k + ": '" + v + "' is not an unsigned integer");
          }
        });
  }
  void bind_double(const std::string& key, double& field) {
    add(key, [&field] { return format_double(field); },
        [&field](const std::string& k, const std::string& v) { field = to_double(k, v); });
  }
  void bind_bool(const std::string& key, bool& field) {
    add(key, [&field] { return std::string(field ? "true" : "false"); },
        [&field](const std::string& k, const std::string& v) { field = to_bool(k, v); });
  }
  void bind_doubles(const std::string& key, std::vector<double>& field) {
    add(key, [&field] { return join(field); },
        [&field](const std::string& k, const std::string& v) {
          field.clear();
          for (const auto& s : split_list(v)) field.push_back(to_double(k, s));
        });
  }
  void bind_ints(const std::string& key, std::vector<int>& field) {
    add(key, [&field] { return join(field); },
        [&field](const std::string& k, const std::string& v) {
          field.clear();
          for (const auto& s : split_list(v)) field.push_back(static_cast<int>(to_integer(k, s)));
        });
  }
  void bind_strings(const std::string& key, std::vector<std::string>& field,
                    const std::string& sep = ",") {
    add(key,
        [&field, sep] {
          std::string out;
          for (std::size_t i = 0; i < field.size(); ++i) out += (i ? sep : "") + field[i];
          return out;
        },
        [&field, sep](const std::string&, const std::string& v) {
          field.clear();
          std::string trimmed = boost::algorithm::trim_copy(v);
          if (trimmed.empty()) return;
          boost::algorithm::split(field, trimmed, boost::algorithm::is_any_of(sep));
          for (auto& s : field) boost::algorithm::trim(s);
        });
  }

  ExperimentConfig& c_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

}  // namespace

void ExperimentConfig::validate() const {
  auto positive = [](long long v, const char* what) {
    if (v < 1) throw InvalidArgument(std::string("config: ") + what + " must be >= 1");
  };
  positive(dgp.envs_per_type, "dgp.envs_per_type");
  positive(dgp.samples, "dgp.samples");
  positive(dgp.test_envs_per_type, "dgp.test_envs_per_type");
  positive(dgp.test_samples, "dgp.test_samples");
  if (!(dgp.sigma > 0.0) || !(dgp.sigma_test > 0.0)) {
    throw InvalidArgument("config: dgp.sigma and dgp.sigma_test must be > 0");
  }
  LevelSampling{dgp.max_level, dgp.level_grid}.validate();
  selector.train.validate();
  selector.summary.validate();
  for (int j : selector.constraint) {
    if (j < 0) throw InvalidArgument("config: selector.constraint indices must be >= 0");
  }
  static const std::set<std::string> kConditions{"envs", "samples", "summaries", "coverage"};
  static const std::set<std::string> kVariants{"full", "r", "s2", "s3"};
  for (const auto& c : sweep.conditions) {
    if (!kConditions.count(c)) throw InvalidArgument("config: unknown sweep condition '" + c + "'");
  }
  for (const auto& v : sweep.summary_variants) {
    if (!kVariants.count(v)) throw InvalidArgument("config: unknown summary variant '" + v + "'");
  }
  auto nonempty = [](bool empty, const char* what) {
    if (empty) throw InvalidArgument(std::string("config: ") + what + " must be nonempty");
  };
  nonempty(sweep.envs_per_type.empty(), "sweep.envs_per_type");
  nonempty(sweep.samples.empty(), "sweep.samples");
  nonempty(sweep.sigmas.empty(), "sweep.sigmas");
  nonempty(sweep.summary_variants.empty(), "sweep.summary_variants");
  nonempty(sweep.coverage.empty(), "sweep.coverage");
  for (int v : sweep.envs_per_type) positive(v, "sweep.envs_per_type entries");
  for (int v : sweep.samples) positive(v, "sweep.samples entries");
  for (double s : sweep.sigmas) {
    if (!(s > 0.0)) throw InvalidArgument("config: sweep.sigmas entries must be > 0");
  }
  for (double c : sweep.coverage) {
    if (!(c >= 0.0)) throw InvalidArgument("config: sweep.coverage entries must be >= 0");
  }
  nonempty(crossover.deltas.empty(), "crossover.deltas");
  positive(crossover.train_envs, "crossover.train_envs");
  positive(crossover.train_samples, "crossover.train_samples");
  positive(crossover.test_samples, "crossover.test_samples");
  positive(baselines.folds, "baselines.folds");
  positive(run.replications, "run.replications");
  if (run.threads < 0) throw InvalidArgument("config: run.threads must be >= 0");
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  Binder(cfg).read(tree);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config '" + path.string() + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  Binder(copy).write(out);
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_config(out, cfg);
}

}  // namespace eacs
