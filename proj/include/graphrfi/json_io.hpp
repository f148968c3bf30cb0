#pragma once

// JSON views of configs and reports: the config-file format, the loss stream,
// and the metrics/sweep outputs.

#include <string>

#include <json.hpp>

#include "graphrfi/attacks.hpp"
#include "graphrfi/errors.hpp"
#include "graphrfi/metrics.hpp"
#include "graphrfi/synth.hpp"
#include "graphrfi/train.hpp"

namespace graphrfi {

inline nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  return nlohmann::ordered_json{{"lambda", c.lambda},
                                {"embedding_dim", c.embedding_dim},
                                {"hidden", c.hidden},
                                {"attention_hidden", c.attention_hidden},
                                {"dense_dim", c.dense_dim},
                                {"trees", c.trees},
                                {"tree_depth", c.tree_depth},
                                {"learning_rate", c.learning_rate},
                                {"epochs", c.epochs},
                                {"batch_size", c.batch_size},
                                {"seed", c.seed},
                                {"weight_stop_gradient", c.weight_stop_gradient},
                                {"error_feature_stop_gradient", c.error_feature_stop_gradient},
                                {"init_std", c.init_std},
                                {"force_unit_weights", c.force_unit_weights},
                                {"optimizer", c.optimizer},
                                {"threads", c.threads}};
}

// Applies the keys present in `j` onto `c`; unknown keys are rejected.
inline void merge_train_config(TrainConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "lambda") c.lambda = value.get<double>();
      else if (key == "embedding_dim") c.embedding_dim = value.get<int>();
      else if (key == "hidden") c.hidden = value.get<int>();
      else if (key == "attention_hidden") c.attention_hidden = value.get<int>();
      else if (key == "dense_dim") c.dense_dim = value.get<int>();
      else if (key == "trees") c.trees = value.get<int>();
      else if (key == "tree_depth") c.tree_depth = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "weight_stop_gradient") c.weight_stop_gradient = value.get<bool>();
      else if (key == "error_feature_stop_gradient") c.error_feature_stop_gradient = value.get<bool>();
      else if (key == "init_std") c.init_std = value.get<double>();
      else if (key == "force_unit_weights") c.force_unit_weights = value.get<bool>();
      else if (key == "optimizer") c.optimizer = value.get<std::string>();
      else if (key == "threads") c.threads = value.get<int>();
      else throw ValidationError("config: unknown key \"" + key + "\"");
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("config: bad value for key \"" + key + "\"");
    }
  }
}

inline nlohmann::ordered_json loss_report_to_json(const LossReport& r) {
  return nlohmann::ordered_json{{"epoch", r.epoch},
                                {"rating_loss", r.rating_loss},
                                {"fraudster_loss", r.fraudster_loss},
                                {"total", r.total}};
}

inline nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
  nlohmann::ordered_json j{{"rmse", m.rmse}, {"mae", m.mae}};
  if (m.has_classification) {
    j["classification"] = nlohmann::ordered_json{{"precision", m.cls.precision},
                                                 {"recall", m.cls.recall},
                                                 {"f1", m.cls.f1},
                                                 {"tp", m.cls.tp},
                                                 {"fp", m.cls.fp},
                                                 {"fn", m.cls.fn},
                                                 {"tn", m.cls.tn},
                                                 {"degenerate_precision", m.cls.degenerate_precision},
                                                 {"degenerate_recall", m.cls.degenerate_recall}};
  }
  return j;
}

inline nlohmann::ordered_json sweep_curve_to_json(const SweepCurve& curve) {
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  for (const auto& p : curve.points) {
    nlohmann::ordered_json j{{"fraction", p.fraction}};
    j["metrics"] = metrics_to_json(p.metrics);
    points.push_back(j);
  }
  return nlohmann::ordered_json{{"points", points}};
}

inline std::string sweep_curve_to_csv(const SweepCurve& curve) {
  std::string out = "fraction,rmse,mae,precision,recall,f1\n";
  for (const auto& p : curve.points) {
    out += std::to_string(p.fraction) + "," + std::to_string(p.metrics.rmse) + "," +
           std::to_string(p.metrics.mae) + "," + std::to_string(p.metrics.cls.precision) + "," +
           std::to_string(p.metrics.cls.recall) + "," + std::to_string(p.metrics.cls.f1) + "\n";
  }
  return out;
}

}  // namespace graphrfi
