#include "esp/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace esp {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

struct Parser {
  std::string origin;

  [[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw std::invalid_argument(origin + ": config key '" + path + "': " + msg);
  }

  int64_t to_i64(const std::string& path, const std::string& v) {
    try {
      size_t pos = 0;
      int64_t r = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing chars");
      return r;
    } catch (const std::exception&) {
      fail(path, "expected integer, got '" + v + "'");
    }
  }

  uint64_t to_u64(const std::string& path, const std::string& v) {
    try {
      size_t pos = 0;
      uint64_t r = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing chars");
      return r;
    } catch (const std::exception&) {
      fail(path, "expected unsigned integer, got '" + v + "'");
    }
  }

  double to_f64(const std::string& path, const std::string& v) {
    try {
      size_t pos = 0;
      double r = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing chars");
      return r;
    } catch (const std::exception&) {
      fail(path, "expected number, got '" + v + "'");
    }
  }

  bool to_bool(const std::string& path, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    fail(path, "expected boolean, got '" + v + "'");
  }
};

}  // namespace

ExperimentConfig ExperimentConfig::from_text(const std::string& text,
                                             const std::string& origin) {
  ExperimentConfig cfg;
  Parser p{origin};
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                    ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "trainer" && section != "esp")
        throw std::invalid_argument(origin + ": unknown section [" + section +
                                    "]");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    std::string path = section.empty() ? key : section + "." + key;

    if (section.empty()) {
      if (key == "env") cfg.env_name = val;
      else if (key == "n_agents") cfg.n_agents = static_cast<int>(p.to_i64(path, val));
      else if (key == "algorithm") cfg.algorithm = val;
      else if (key == "total_steps") cfg.total_steps = p.to_i64(path, val);
      else if (key == "eval_every") cfg.eval_every = p.to_i64(path, val);
      else if (key == "eval_episodes") cfg.eval_episodes = static_cast<int>(p.to_i64(path, val));
      else if (key == "n_seeds") cfg.n_seeds = static_cast<int>(p.to_i64(path, val));
      else if (key == "seed") cfg.seed = p.to_u64(path, val);
      else if (key == "out_dir") cfg.out_dir = val;
      else p.fail(path, "unknown key");
    } else if (section == "trainer") {
      TrainerConfig& t = cfg.trainer;
      if (key == "gamma") t.gamma = p.to_f64(path, val);
      else if (key == "gae_lambda") t.gae_lambda = p.to_f64(path, val);
      else if (key == "clip") t.clip = p.to_f64(path, val);
      else if (key == "epochs") t.epochs = static_cast<int>(p.to_i64(path, val));
      else if (key == "minibatches") t.minibatches = static_cast<int>(p.to_i64(path, val));
      else if (key == "lr") t.lr = p.to_f64(path, val);
      else if (key == "entropy_coef") t.entropy_coef = p.to_f64(path, val);
      else if (key == "max_grad_norm") t.max_grad_norm = p.to_f64(path, val);
      else if (key == "n_envs") t.n_envs = static_cast<int>(p.to_i64(path, val));
      else if (key == "horizon") t.horizon = static_cast<int>(p.to_i64(path, val));
      else if (key == "hidden") {
        t.hidden.clear();
        for (const std::string& h : split_list(val))
          t.hidden.push_back(static_cast<int>(p.to_i64(path, h)));
      } else p.fail(path, "unknown key");
    } else {  // esp
      EspConfig& e = cfg.esp;
      if (key == "group") e.group = val;
      else if (key == "augmentation_elements") e.augmentation_elements = split_list(val);
      else if (key == "consistency_elements") e.consistency_elements = split_list(val);
      else if (key == "c") e.c = p.to_f64(path, val);
      else if (key == "kl_direction") {
        if (val == "as_written") e.kl_direction = EspConfig::KlDirection::kAsWritten;
        else if (val == "reversed") e.kl_direction = EspConfig::KlDirection::kReversed;
        else p.fail(path, "expected as_written|reversed");
      } else if (key == "augment") e.augment_enabled = p.to_bool(path, val);
      else if (key == "loss") e.loss_enabled = p.to_bool(path, val);
      else p.fail(path, "unknown key");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), path);
}

void ExperimentConfig::validate() const {
  if (total_steps <= 0)
    throw std::invalid_argument("config: total_steps must be > 0");
  if (algorithm != "mappo" && algorithm != "mappo_esp")
    throw std::invalid_argument("config: algorithm must be mappo|mappo_esp");
  if (eval_episodes < 0 || n_seeds < 1)
    throw std::invalid_argument("config: bad eval_episodes/n_seeds");
  if (trainer.epochs < 1 || trainer.minibatches < 1 || trainer.horizon < 1 ||
      trainer.n_envs < 1)
    throw std::invalid_argument("config: bad trainer sizes");
  esp.validate();
}

std::string ExperimentConfig::resolved_text() const {
  std::ostringstream os;
  os << "env = " << env_name << "\n";
  os << "n_agents = " << n_agents << "\n";
  os << "algorithm = " << algorithm << "\n";
  os << "total_steps = " << total_steps << "\n";
  os << "eval_every = " << eval_every << "\n";
  os << "eval_episodes = " << eval_episodes << "\n";
  os << "n_seeds = " << n_seeds << "\n";
  os << "seed = " << seed << "\n";
  os << "out_dir = " << out_dir << "\n";
  os << "\n[trainer]\n";
  char buf[64];
  auto f = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "gamma = " << f(trainer.gamma) << "\n";
  os << "gae_lambda = " << f(trainer.gae_lambda) << "\n";
  os << "clip = " << f(trainer.clip) << "\n";
  os << "epochs = " << trainer.epochs << "\n";
  os << "minibatches = " << trainer.minibatches << "\n";
  os << "lr = " << f(trainer.lr) << "\n";
  os << "entropy_coef = " << f(trainer.entropy_coef) << "\n";
  os << "max_grad_norm = " << f(trainer.max_grad_norm) << "\n";
  os << "n_envs = " << trainer.n_envs << "\n";
  os << "horizon = " << trainer.horizon << "\n";
  os << "hidden = ";
  for (size_t i = 0; i < trainer.hidden.size(); ++i)
    os << (i ? "," : "") << trainer.hidden[i];
  os << "\n";
  os << "\n[esp]\n";
  os << "group = " << esp.group << "\n";
  os << "augmentation_elements = ";
  for (size_t i = 0; i < esp.augmentation_elements.size(); ++i)
    os << (i ? "," : "") << esp.augmentation_elements[i];
  os << "\n";
  os << "consistency_elements = ";
  for (size_t i = 0; i < esp.consistency_elements.size(); ++i)
    os << (i ? "," : "") << esp.consistency_elements[i];
  os << "\n";
  os << "c = " << f(esp.c) << "\n";
  os << "kl_direction = "
     << (esp.kl_direction == EspConfig::KlDirection::kAsWritten ? "as_written"
                                                                : "reversed")
     << "\n";
  os << "augment = " << (esp.augment_enabled ? "true" : "false") << "\n";
  os << "loss = " << (esp.loss_enabled ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace esp
