#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "esp/config.hpp"

using namespace esp;

TEST_CASE("defaults parse from an empty config") {
  ExperimentConfig cfg = ExperimentConfig::from_text("");
  CHECK(cfg.env_name == "coop_nav");
  CHECK(cfg.algorithm == "mappo");
  CHECK(cfg.trainer.gamma == 0.99);
  CHECK(cfg.trainer.epochs == 10);
  CHECK(cfg.trainer.horizon == 200);
  CHECK(cfg.trainer.n_envs == 8);
  CHECK(cfg.esp.c == 0.5);
  CHECK(cfg.esp.group == "c4");
}

TEST_CASE("sections, comments, and lists parse") {
  ExperimentConfig cfg = ExperimentConfig::from_text(R"(
# comment
env = predator_prey
algorithm = mappo_esp
total_steps = 5000     # trailing comment
seed = 9

[trainer]
hidden = 32, 32
lr = 1e-3

[esp]
group = d4
augmentation_elements = r90, flipx
kl_direction = reversed
augment = false
)");
  CHECK(cfg.env_name == "predator_prey");
  CHECK(cfg.algorithm == "mappo_esp");
  CHECK(cfg.total_steps == 5000);
  CHECK(cfg.seed == 9);
  CHECK(cfg.trainer.hidden == std::vector<int>{32, 32});
  CHECK(cfg.trainer.lr == 1e-3);
  CHECK(cfg.esp.group == "d4");
  CHECK(cfg.esp.augmentation_elements ==
        std::vector<std::string>{"r90", "flipx"});
  CHECK(cfg.esp.kl_direction == EspConfig::KlDirection::kReversed);
  CHECK_FALSE(cfg.esp.augment_enabled);
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("learning_rate = 0.1"),
                       doctest::Contains("learning_rate"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("[trainer]\ncc = 0.5"),
                       doctest::Contains("trainer.cc"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("[esp]\ncc = 0.5"),
                       doctest::Contains("esp.cc"), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_text("[nope]\nx = 1"),
                  std::invalid_argument);
}

TEST_CASE("malformed values are rejected") {
  CHECK_THROWS_AS(ExperimentConfig::from_text("total_steps = soon"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_text("total_steps = 0"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_text("algorithm = ddpg"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_text("[esp]\nc = -2"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_text("[esp]\nkl_direction = both"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_text("badline"),
                  std::invalid_argument);
}

TEST_CASE("resolved text round-trips through the parser") {
  ExperimentConfig cfg = ExperimentConfig::from_text(R"(
env = formation_change
n_agents = 8
algorithm = mappo_esp
total_steps = 7777
[trainer]
lr = 0.00025
hidden = 16
[esp]
c = 0.25
consistency_elements = r90, r180
)");
  ExperimentConfig again = ExperimentConfig::from_text(cfg.resolved_text());
  CHECK(again.env_name == cfg.env_name);
  CHECK(again.n_agents == cfg.n_agents);
  CHECK(again.total_steps == cfg.total_steps);
  CHECK(again.trainer.lr == cfg.trainer.lr);
  CHECK(again.trainer.hidden == cfg.trainer.hidden);
  CHECK(again.esp.c == cfg.esp.c);
  CHECK(again.esp.consistency_elements == cfg.esp.consistency_elements);
  CHECK(again.resolved_text() == cfg.resolved_text());
}
