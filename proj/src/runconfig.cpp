#include "pbpa/runconfig.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace pbpa {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int parse_int(const std::string& v) {
  std::size_t pos = 0;
  const int out = std::stoi(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return out;
}

std::uint64_t parse_u64(const std::string& v) {
  std::size_t pos = 0;
  const unsigned long long out = std::stoull(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return out;
}

double parse_double(const std::string& v) {
  std::size_t pos = 0;
  const double out = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return out;
}

const std::map<std::string, Field>& schema() {
  static const std::map<std::string, Field> fields = [] {
    std::map<std::string, Field> f;
    auto add_int = [&f](const std::string& key, std::function<int&(RunConfig&)> ref) {
      f[key] = Field{[ref](RunConfig& c, const std::string& v) { ref(c) = parse_int(v); },
                     [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
    };
    auto add_u64 = [&f](const std::string& key, std::function<std::uint64_t&(RunConfig&)> ref) {
      f[key] = Field{[ref](RunConfig& c, const std::string& v) { ref(c) = parse_u64(v); },
                     [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
    };
    auto add_double = [&f](const std::string& key, std::function<double&(RunConfig&)> ref) {
      f[key] = Field{[ref](RunConfig& c, const std::string& v) { ref(c) = parse_double(v); },
                     [ref](const RunConfig& c) { return fmt_double(ref(const_cast<RunConfig&>(c))); }};
    };
    auto add_string = [&f](const std::string& key, std::function<std::string&(RunConfig&)> ref) {
      f[key] = Field{[ref](RunConfig& c, const std::string& v) { ref(c) = v; },
                     [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); }};
    };

    // model
    add_int("k", [](RunConfig& c) -> int& { return c.model.k; });
    add_int("max_humans", [](RunConfig& c) -> int& { return c.model.max_humans; });
    add_int("max_objects", [](RunConfig& c) -> int& { return c.model.max_objects; });
    add_int("pair_pool", [](RunConfig& c) -> int& { return c.model.pair_pool; });
    add_int("roi_pool", [](RunConfig& c) -> int& { return c.model.roi_pool; });
    add_double("w_p", [](RunConfig& c) -> double& { return c.model.w_p; });
    add_double("w_n", [](RunConfig& c) -> double& { return c.model.w_n; });
    add_double("lr", [](RunConfig& c) -> double& { return c.model.lr; });
    add_double("lr_decay", [](RunConfig& c) -> double& { return c.model.lr_decay; });
    add_double("decay_frac", [](RunConfig& c) -> double& { return c.model.decay_frac; });
    add_int("steps", [](RunConfig& c) -> int& { return c.model.steps; });
    add_int("batch", [](RunConfig& c) -> int& { return c.model.batch; });
    add_u64("seed", [](RunConfig& c) -> std::uint64_t& { return c.model.seed; });
    f["object_mode"] = Field{[](RunConfig& c, const std::string& v) {
                               if (v == "union")
                                 c.model.object_mode = ModelConfig::ObjectMode::kUnion;
                               else if (v == "tight")
                                 c.model.object_mode = ModelConfig::ObjectMode::kTight;
                               else
                                 throw std::invalid_argument("expected union|tight");
                             },
                             [](const RunConfig& c) {
                               return c.model.object_mode == ModelConfig::ObjectMode::kUnion ? "union" : "tight";
                             }};
    f["attention_mode"] = Field{[](RunConfig& c, const std::string& v) {
                                  if (v == "pairs")
                                    c.model.attention_mode = ModelConfig::AttentionMode::kPairs;
                                  else if (v == "pairs_parts")
                                    c.model.attention_mode = ModelConfig::AttentionMode::kPairsParts;
                                  else if (v == "off")
                                    c.model.attention_mode = ModelConfig::AttentionMode::kOff;
                                  else
                                    throw std::invalid_argument("expected pairs|pairs_parts|off");
                                },
                                [](const RunConfig& c) {
                                  switch (c.model.attention_mode) {
                                    case ModelConfig::AttentionMode::kPairs: return "pairs";
                                    case ModelConfig::AttentionMode::kPairsParts: return "pairs_parts";
                                    case ModelConfig::AttentionMode::kOff: return "off";
                                  }
                                  return "pairs";
                                }};

    // shared by model and generator
    f["classes"] = Field{[](RunConfig& c, const std::string& v) {
                           const int n = parse_int(v);
                           c.model.classes = n;
                           c.gen.classes = n;
                         },
                         [](const RunConfig& c) { return std::to_string(c.model.classes); }};
    f["canvas"] = Field{[](RunConfig& c, const std::string& v) {
                          const int n = parse_int(v);
                          c.model.canvas = n;
                          c.gen.canvas = n;
                        },
                        [](const RunConfig& c) { return std::to_string(c.model.canvas); }};
    f["part_ratio"] = Field{[](RunConfig& c, const std::string& v) {
                              const double d = parse_double(v);
                              c.model.part_ratio = d;
                              c.gen.part_ratio = d;
                            },
                            [](const RunConfig& c) { return fmt_double(c.model.part_ratio); }};

    // generator
    add_int("min_persons", [](RunConfig& c) -> int& { return c.gen.min_persons; });
    add_int("max_persons", [](RunConfig& c) -> int& { return c.gen.max_persons; });
    add_int("gen_max_objects", [](RunConfig& c) -> int& { return c.gen.max_objects; });
    add_int("distractor_max", [](RunConfig& c) -> int& { return c.gen.distractor_max; });
    add_double("contact_ratio", [](RunConfig& c) -> double& { return c.gen.contact_ratio; });
    add_double("act_prob", [](RunConfig& c) -> double& { return c.gen.act_prob; });
    add_double("second_act_prob", [](RunConfig& c) -> double& { return c.gen.second_act_prob; });

    // run-level
    add_int("n_train", [](RunConfig& c) -> int& { return c.n_train; });
    add_int("n_test", [](RunConfig& c) -> int& { return c.n_test; });
    add_u64("train_seed", [](RunConfig& c) -> std::uint64_t& { return c.train_seed; });
    add_u64("test_seed", [](RunConfig& c) -> std::uint64_t& { return c.test_seed; });
    add_int("log_every", [](RunConfig& c) -> int& { return c.log_every; });
    add_int("eval_jobs", [](RunConfig& c) -> int& { return c.eval_jobs; });
    add_string("train_data", [](RunConfig& c) -> std::string& { return c.train_data; });
    add_string("test_data", [](RunConfig& c) -> std::string& { return c.test_data; });
    add_string("checkpoint", [](RunConfig& c) -> std::string& { return c.checkpoint; });
    return f;
  }();
  return fields;
}

}  // namespace

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ContractError("config line " + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& fields = schema();
    const auto it = fields.find(key);
    if (it == fields.end())
      throw ContractError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    try {
      it->second.set(cfg, value);
    } catch (const ContractError&) {
      throw;
    } catch (const std::exception& e) {
      throw ContractError("config line " + std::to_string(line_no) + ": bad value for '" + key + "': " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_text(buf.str());
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, field] : schema()) out.emplace_back(key, field.get(*this));
  return out;
}

}  // namespace pbpa
