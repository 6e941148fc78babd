#include "vamuon/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vamuon {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << msg;
  throw ConfigError(os.str());
}

double parse_double(const std::string& origin, int line, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    fail(origin, line, "key '" + key + "': expected a number, got '" + value + "'");
  }
}

std::int64_t parse_int(const std::string& origin, int line, const std::string& key,
                       const std::string& value) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    fail(origin, line, "key '" + key + "': expected an integer, got '" + value + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& origin, int line, const std::string& key,
                         const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    fail(origin, line, "key '" + key + "': expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& origin, int line, const std::string& key,
                const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  fail(origin, line, "key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& origin, int line, const std::string& key,
                                      const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(origin, line, "key '" + key + "': empty list element");
    out.push_back(parse_double(origin, line, key, item));
  }
  return out;
}

std::string full_digits(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (steps < 1) throw ConfigError("run.steps must be >= 1");
  if (log_every < 1) throw ConfigError("run.log_every must be >= 1");
  if (checkpoint_at < 0 || checkpoint_at > steps) {
    throw ConfigError("run.checkpoint_at must lie in [0, run.steps]");
  }
  if (checkpoint_at > 0 && checkpoint_path.empty()) {
    throw ConfigError("run.checkpoint_path required when run.checkpoint_at is set");
  }
  try {
    problem.validate();
    optimizer.validate();
    schedule.validate(steps);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  bool have_kind = false;
  bool have_variant = false;
  bool have_problem_seed = false;

  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    const std::size_t eq = raw.find('=');
    if (eq == std::string::npos) fail(origin, line, "expected 'key = value'");
    const std::string key = trim(raw.substr(0, eq));
    const std::string value = trim(raw.substr(eq + 1));
    if (key.empty() || value.empty()) fail(origin, line, "expected 'key = value'");

    if (key == "problem.kind") {
      try {
        cfg.problem.kind = problem_kind_from_string(value);
      } catch (const std::invalid_argument& e) {
        fail(origin, line, e.what());
      }
      have_kind = true;
    } else if (key == "problem.rows") {
      cfg.problem.rows = parse_int(origin, line, key, value);
    } else if (key == "problem.cols") {
      cfg.problem.cols = parse_int(origin, line, key, value);
    } else if (key == "problem.rank") {
      cfg.problem.rank = parse_int(origin, line, key, value);
    } else if (key == "problem.samples") {
      cfg.problem.samples = parse_int(origin, line, key, value);
    } else if (key == "problem.features") {
      cfg.problem.features = parse_int(origin, line, key, value);
    } else if (key == "problem.hidden") {
      cfg.problem.hidden = parse_int(origin, line, key, value);
    } else if (key == "problem.outputs") {
      cfg.problem.outputs = parse_int(origin, line, key, value);
    } else if (key == "problem.curvature") {
      cfg.problem.curvature = parse_double(origin, line, key, value);
    } else if (key == "problem.condition") {
      cfg.problem.condition = parse_double(origin, line, key, value);
    } else if (key == "problem.noise_sigma") {
      cfg.problem.noise_sigma = parse_double_list(origin, line, key, value);
    } else if (key == "problem.seed") {
      cfg.problem.seed = parse_uint(origin, line, key, value);
      have_problem_seed = true;
    } else if (key == "optimizer.variant") {
      try {
        cfg.optimizer.variant = variant_from_string(value);
      } catch (const std::invalid_argument& e) {
        fail(origin, line, e.what());
      }
      have_variant = true;
    } else if (key == "optimizer.eta") {
      cfg.optimizer.eta = parse_double(origin, line, key, value);
    } else if (key == "optimizer.lambda") {
      cfg.optimizer.lambda = parse_double(origin, line, key, value);
    } else if (key == "optimizer.beta") {
      cfg.optimizer.beta = parse_double(origin, line, key, value);
    } else if (key == "optimizer.gamma") {
      cfg.optimizer.gamma = parse_double(origin, line, key, value);
    } else if (key == "optimizer.epsilon") {
      cfg.optimizer.epsilon = parse_double(origin, line, key, value);
    } else if (key == "optimizer.ns_iterations") {
      cfg.optimizer.ns_iterations = static_cast<int>(parse_int(origin, line, key, value));
    } else if (key == "optimizer.scale_rule") {
      try {
        cfg.optimizer.scale_rule = scale_rule_from_string(value);
      } catch (const std::invalid_argument& e) {
        fail(origin, line, e.what());
      }
    } else if (key == "optimizer.bias_correction") {
      cfg.optimizer.bias_correction = parse_bool(origin, line, key, value);
    } else if (key == "optimizer.adam_beta1") {
      cfg.optimizer.adam_beta1 = parse_double(origin, line, key, value);
    } else if (key == "optimizer.adam_beta2") {
      cfg.optimizer.adam_beta2 = parse_double(origin, line, key, value);
    } else if (key == "optimizer.adam_epsilon") {
      cfg.optimizer.adam_epsilon = parse_double(origin, line, key, value);
    } else if (key == "schedule.kind") {
      try {
        cfg.schedule.kind = schedule_from_string(value);
      } catch (const std::invalid_argument& e) {
        fail(origin, line, e.what());
      }
    } else if (key == "schedule.warmup_steps") {
      cfg.schedule.warmup_steps = parse_int(origin, line, key, value);
    } else if (key == "schedule.min_eta") {
      cfg.schedule.min_eta = parse_double(origin, line, key, value);
    } else if (key == "schedule.decay_fraction") {
      cfg.schedule.decay_fraction = parse_double(origin, line, key, value);
    } else if (key == "run.steps") {
      cfg.steps = parse_int(origin, line, key, value);
    } else if (key == "run.clip_norm") {
      cfg.clip_norm = value == "off" ? 0.0 : parse_double(origin, line, key, value);
    } else if (key == "run.log_every") {
      cfg.log_every = parse_int(origin, line, key, value);
    } else if (key == "run.master_seed") {
      cfg.master_seed = parse_uint(origin, line, key, value);
    } else if (key == "run.out_dir") {
      cfg.out_dir = value;
    } else if (key == "run.loss_threshold") {
      cfg.loss_threshold = parse_double(origin, line, key, value);
    } else if (key == "run.checkpoint_at") {
      cfg.checkpoint_at = parse_int(origin, line, key, value);
    } else if (key == "run.checkpoint_path") {
      cfg.checkpoint_path = value;
    } else if (key == "run.resume_from") {
      cfg.resume_from = value;
    } else {
      fail(origin, line, "unknown key '" + key + "'");
    }
  }

  if (!have_kind) throw ConfigError(origin + ": missing required key 'problem.kind'");
  if (!have_variant) throw ConfigError(origin + ": missing required key 'optimizer.variant'");
  if (!have_problem_seed) cfg.problem.seed = cfg.master_seed;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string render_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "problem.kind = " << to_string(cfg.problem.kind) << "\n";
  os << "problem.rows = " << cfg.problem.rows << "\n";
  os << "problem.cols = " << cfg.problem.cols << "\n";
  os << "problem.rank = " << cfg.problem.rank << "\n";
  os << "problem.samples = " << cfg.problem.samples << "\n";
  os << "problem.features = " << cfg.problem.features << "\n";
  os << "problem.hidden = " << cfg.problem.hidden << "\n";
  os << "problem.outputs = " << cfg.problem.outputs << "\n";
  os << "problem.curvature = " << full_digits(cfg.problem.curvature) << "\n";
  os << "problem.condition = " << full_digits(cfg.problem.condition) << "\n";
  if (!cfg.problem.noise_sigma.empty()) {
    os << "problem.noise_sigma = ";
    for (std::size_t i = 0; i < cfg.problem.noise_sigma.size(); ++i) {
      if (i) os << ",";
      os << full_digits(cfg.problem.noise_sigma[i]);
    }
    os << "\n";
  }
  os << "problem.seed = " << cfg.problem.seed << "\n";
  os << "optimizer.variant = " << to_string(cfg.optimizer.variant) << "\n";
  os << "optimizer.eta = " << full_digits(cfg.optimizer.eta) << "\n";
  os << "optimizer.lambda = " << full_digits(cfg.optimizer.lambda) << "\n";
  os << "optimizer.beta = " << full_digits(cfg.optimizer.beta) << "\n";
  os << "optimizer.gamma = " << full_digits(cfg.optimizer.gamma) << "\n";
  os << "optimizer.epsilon = " << full_digits(cfg.optimizer.epsilon) << "\n";
  os << "optimizer.ns_iterations = " << cfg.optimizer.ns_iterations << "\n";
  os << "optimizer.scale_rule = " << to_string(cfg.optimizer.scale_rule) << "\n";
  os << "optimizer.bias_correction = " << (cfg.optimizer.bias_correction ? "true" : "false")
     << "\n";
  os << "optimizer.adam_beta1 = " << full_digits(cfg.optimizer.adam_beta1) << "\n";
  os << "optimizer.adam_beta2 = " << full_digits(cfg.optimizer.adam_beta2) << "\n";
  os << "optimizer.adam_epsilon = " << full_digits(cfg.optimizer.adam_epsilon) << "\n";
  os << "schedule.kind = " << to_string(cfg.schedule.kind) << "\n";
  os << "schedule.warmup_steps = " << cfg.schedule.warmup_steps << "\n";
  os << "schedule.min_eta = " << full_digits(cfg.schedule.min_eta) << "\n";
  os << "schedule.decay_fraction = " << full_digits(cfg.schedule.decay_fraction) << "\n";
  os << "run.steps = " << cfg.steps << "\n";
  os << "run.clip_norm = " << (cfg.clip_norm > 0.0 ? full_digits(cfg.clip_norm) : "off") << "\n";
  os << "run.log_every = " << cfg.log_every << "\n";
  os << "run.master_seed = " << cfg.master_seed << "\n";
  os << "run.out_dir = " << cfg.out_dir << "\n";
  if (cfg.loss_threshold) {
    os << "run.loss_threshold = " << full_digits(*cfg.loss_threshold) << "\n";
  }
  if (cfg.checkpoint_at > 0) {
    os << "run.checkpoint_at = " << cfg.checkpoint_at << "\n";
    os << "run.checkpoint_path = " << cfg.checkpoint_path << "\n";
  }
  if (!cfg.resume_from.empty()) {
    os << "run.resume_from = " << cfg.resume_from << "\n";
  }
  return os.str();
}

}  // namespace vamuon
