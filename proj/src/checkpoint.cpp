#include "esp/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "esp/environments.hpp"

namespace esp {

namespace {

constexpr char kMagic[8] = {'E', 'S', 'P', 'C', 'K', 'P', 'T', '\x01'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_doubles(std::ostream& os, const std::vector<double>& v) {
  write_u64(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& is) {
  uint64_t n = read_u64(is);
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  return v;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, kVersion);

  nlohmann::json h;
  h["env"] = env_name;
  h["n_agents"] = n_agents;
  h["algorithm"] = algorithm;
  h["hidden"] = hidden;
  h["step"] = step;
  h["opt_policy_t"] = opt_policy.t;
  h["opt_critic_t"] = opt_critic.t;
  h["rng"] = rng_states;
  auto slice_listing = [](const ParameterVector& p) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ParamSlice& s : p.slices())
      arr.push_back({{"name", s.name},
                     {"offset", s.offset},
                     {"rows", s.rows},
                     {"cols", s.cols}});
    return arr;
  };
  h["policy_slices"] = slice_listing(policy.params);
  h["critic_slices"] = slice_listing(critic.params);
  std::string hs = h.dump();
  write_u32(os, static_cast<uint32_t>(hs.size()));
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  write_doubles(os, policy.params.values);
  write_doubles(os, critic.params.values);
  write_doubles(os, opt_policy.m);
  write_doubles(os, opt_policy.v);
  write_doubles(os, opt_critic.m);
  write_doubles(os, opt_critic.v);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::string(magic, 8) != std::string(kMagic, 8))
    throw std::runtime_error("checkpoint: bad magic in " + path);
  uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  uint32_t hlen = read_u32(is);
  std::string hs(hlen, '\0');
  is.read(hs.data(), hlen);
  nlohmann::json h = nlohmann::json::parse(hs);

  Checkpoint c;
  c.env_name = h.at("env").get<std::string>();
  c.n_agents = h.at("n_agents").get<int>();
  c.algorithm = h.at("algorithm").get<std::string>();
  c.hidden = h.at("hidden").get<std::vector<int>>();
  c.step = h.at("step").get<int64_t>();
  if (h.contains("rng"))
    c.rng_states = h.at("rng").get<std::map<std::string, std::string>>();

  // Rebuild the networks against the environment's layouts, then overwrite
  // the freshly initialized values with the stored ones.
  auto env = make_environment(c.env_name, c.n_agents);
  c.policy = Policy(env->obs_dim(), c.hidden, env->action_layout(), 0);
  c.critic = Critic(env->global_dim(), c.hidden, 0);
  std::vector<double> pv = read_doubles(is);
  std::vector<double> cv = read_doubles(is);
  if (pv.size() != c.policy.params.values.size() ||
      cv.size() != c.critic.params.values.size())
    throw std::runtime_error("checkpoint: parameter size mismatch in " + path);
  // The stored slice registry must agree with the rebuilt architecture.
  auto check_slices = [&](const char* key, const ParameterVector& p) {
    if (!h.contains(key)) return;
    const nlohmann::json& arr = h.at(key);
    if (arr.size() != p.slices().size())
      throw std::runtime_error("checkpoint: slice registry mismatch in " + path);
    for (size_t i = 0; i < arr.size(); ++i) {
      const ParamSlice& s = p.slices()[i];
      if (arr[i].at("name") != s.name || arr[i].at("offset") != s.offset ||
          arr[i].at("rows") != s.rows || arr[i].at("cols") != s.cols)
        throw std::runtime_error("checkpoint: slice '" + s.name +
                                 "' mismatch in " + path);
    }
  };
  check_slices("policy_slices", c.policy.params);
  check_slices("critic_slices", c.critic.params);
  c.policy.params.values = std::move(pv);
  c.critic.params.values = std::move(cv);
  c.opt_policy.m = read_doubles(is);
  c.opt_policy.v = read_doubles(is);
  c.opt_critic.m = read_doubles(is);
  c.opt_critic.v = read_doubles(is);
  c.opt_policy.t = h.at("opt_policy_t").get<int64_t>();
  c.opt_critic.t = h.at("opt_critic_t").get<int64_t>();
  if (!is) throw std::runtime_error("checkpoint: truncated file " + path);
  return c;
}

}  // namespace esp
