#pragma once

#include <cstdint>
#include <fstream>
#include <string>

namespace esp {

/// One CSV row per policy update. Doubles are serialized with %.17g so the
/// reproducibility contract (identical files for identical (config, seed))
/// is meaningful at full precision. wall_time_s is the only measured,
/// non-deterministic column.
struct MetricsRecord {
  int64_t step = 0;
  double ep_reward_mean = 0.0;
  double ep_reward_stderr = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl_old_new = 0.0;
  double clip_fraction = 0.0;
  double sym_policy_loss = 0.0;
  double sym_value_loss = 0.0;
  double ratio_max = 1.0;
  double wall_time_s = 0.0;

  static const char* csv_header() {
    return "step,ep_reward_mean,ep_reward_stderr,policy_loss,value_loss,"
           "entropy,kl_old_new,clip_fraction,sym_policy_loss,sym_value_loss,"
           "ratio_max,wall_time_s";
  }
  std::string csv_row() const;
};

class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void append(const MetricsRecord& r);

 private:
  std::ofstream out_;
};

}  // namespace esp
