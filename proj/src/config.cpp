// Copyright 2026 The Edge2Prompt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "e2p/config.hpp"

#include <fstream>
#include <initializer_list>

#include "e2p/common.hpp"

namespace e2p {

std::string to_string(PipelineKind kind) {
  switch (kind) {
    case PipelineKind::kEdge2Prompt: return "EDGE2PROMPT";
    case PipelineKind::kImUnet: return "IM_UNET";
    case PipelineKind::kEmUnet: return "EM_UNET";
    case PipelineKind::kSUnet: return "S_UNET";
  }
  return "UNKNOWN";
}

PipelineKind pipeline_from_string(const std::string& s) {
  if (s == "EDGE2PROMPT") return PipelineKind::kEdge2Prompt;
  if (s == "IM_UNET") return PipelineKind::kImUnet;
  if (s == "EM_UNET") return PipelineKind::kEmUnet;
  if (s == "S_UNET") return PipelineKind::kSUnet;
  throw ConfigError("unknown pipeline '" + s +
                    "' (EDGE2PROMPT, IM_UNET, EM_UNET, S_UNET)");
}

bool uses_backend(PipelineKind kind) {
  return kind == PipelineKind::kEdge2Prompt || kind == PipelineKind::kSUnet;
}

bool uses_edges(PipelineKind kind) {
  return kind == PipelineKind::kEdge2Prompt || kind == PipelineKind::kEmUnet;
}

Modality modality_from_string(const std::string& s) {
  if (s == "CT") return Modality::kCT;
  if (s == "MR_T1_IN") return Modality::kMrT1In;
  if (s == "MR_T1_OOP") return Modality::kMrT1Oop;
  if (s == "MR_T2_SPIR") return Modality::kMrT2Spir;
  if (s == "UNKNOWN") return Modality::kUnknown;
  throw ConfigError("unknown modality '" + s + "'");
}

Detector detector_from_string(const std::string& s) {
  if (s == "canny") return Detector::kCanny;
  if (s == "sobel") return Detector::kSobel;
  if (s == "laplacian") return Detector::kLaplacian;
  throw ConfigError("unknown edge detector '" + s +
                    "' (canny, sobel, laplacian)");
}

void DataConfig::validate() const {
  if (synthetic) {
    if (synthetic_ct < 0 || synthetic_mr < 0 || synthetic_ct + synthetic_mr == 0)
      throw ConfigError("data.synthetic_ct/mr must be non-negative, not both 0");
    if (synthetic_slices < 1)
      throw ConfigError("data.synthetic_slices must be >= 1");
  } else if (root.empty()) {
    throw ConfigError("data.root is required unless data.synthetic is true");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (patience < 1 || patience > epochs)
    throw ConfigError("train.patience must be in [1, epochs]");
  if (learning_rate <= 0.0) throw ConfigError("train.learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (aux_prompt_loss_weight < 0.0)
    throw ConfigError("train.aux_prompt_loss_weight must be >= 0");
}

void EvalConfig::validate() const {
  if (threshold <= 0.0 || threshold >= 1.0)
    throw ConfigError("eval.threshold must be in (0,1)");
}

void ExperimentConfig::validate() const {
  data.validate();
  edm.validate();
  prompt_net.validate();
  backend.validate();
  loss.validate();
  train.validate();
  eval.validate();
}

namespace {

void require_keys(const nlohmann::json& obj, const std::string& prefix,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object())
    throw ConfigError("config section '" + prefix + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("unknown config key '" +
                        (prefix.empty() ? key : prefix + "." + key) + "'");
  }
}

template <typename T>
T get_or(const nlohmann::json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  require_keys(j, "", {"data", "edm", "prompt_net", "backend", "loss", "train",
                       "eval"});
  ExperimentConfig cfg;

  if (j.contains("data")) {
    const auto& d = j.at("data");
    require_keys(d, "data",
                 {"root", "mr_sequence", "synthetic", "synthetic_ct",
                  "synthetic_mr", "synthetic_slices", "synthetic_seed"});
    cfg.data.root = get_or<std::string>(d, "root", cfg.data.root);
    cfg.data.mr_sequence = modality_from_string(get_or<std::string>(
        d, "mr_sequence", to_string(cfg.data.mr_sequence)));
    cfg.data.synthetic = get_or<bool>(d, "synthetic", cfg.data.synthetic);
    cfg.data.synthetic_ct = get_or<int>(d, "synthetic_ct", cfg.data.synthetic_ct);
    cfg.data.synthetic_mr = get_or<int>(d, "synthetic_mr", cfg.data.synthetic_mr);
    cfg.data.synthetic_slices =
        get_or<int>(d, "synthetic_slices", cfg.data.synthetic_slices);
    cfg.data.synthetic_seed =
        get_or<uint64_t>(d, "synthetic_seed", cfg.data.synthetic_seed);
  }
  if (j.contains("edm")) {
    const auto& e = j.at("edm");
    require_keys(e, "edm", {"detector", "sigma", "low", "high"});
    cfg.edm.detector = detector_from_string(
        get_or<std::string>(e, "detector", to_string(cfg.edm.detector)));
    cfg.edm.sigma = get_or<double>(e, "sigma", cfg.edm.sigma);
    cfg.edm.low = get_or<double>(e, "low", cfg.edm.low);
    cfg.edm.high = get_or<double>(e, "high", cfg.edm.high);
  }
  if (j.contains("prompt_net")) {
    const auto& p = j.at("prompt_net");
    require_keys(p, "prompt_net", {"depth", "base_channels"});
    cfg.prompt_net.depth = get_or<int>(p, "depth", cfg.prompt_net.depth);
    cfg.prompt_net.base_channels =
        get_or<int>(p, "base_channels", cfg.prompt_net.base_channels);
  }
  if (j.contains("backend")) {
    const auto& b = j.at("backend");
    require_keys(b, "backend", {"kind", "checkpoint_path", "variant", "device"});
    cfg.backend.kind = backend_kind_from_string(
        get_or<std::string>(b, "kind", to_string(cfg.backend.kind)));
    cfg.backend.checkpoint_path =
        get_or<std::string>(b, "checkpoint_path", cfg.backend.checkpoint_path);
    cfg.backend.variant = get_or<std::string>(b, "variant", cfg.backend.variant);
    cfg.backend.device = get_or<std::string>(b, "device", cfg.backend.device);
  }
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    require_keys(l, "loss", {"w_f", "w_d", "w_lcd", "alpha_t", "gamma",
                             "dice_eps", "per_image_dice"});
    cfg.loss.w_f = get_or<double>(l, "w_f", cfg.loss.w_f);
    cfg.loss.w_d = get_or<double>(l, "w_d", cfg.loss.w_d);
    cfg.loss.w_lcd = get_or<double>(l, "w_lcd", cfg.loss.w_lcd);
    cfg.loss.alpha_t = get_or<double>(l, "alpha_t", cfg.loss.alpha_t);
    cfg.loss.gamma = get_or<double>(l, "gamma", cfg.loss.gamma);
    cfg.loss.dice_eps = get_or<double>(l, "dice_eps", cfg.loss.dice_eps);
    cfg.loss.per_image_dice =
        get_or<bool>(l, "per_image_dice", cfg.loss.per_image_dice);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    require_keys(t, "train",
                 {"epochs", "patience", "learning_rate", "batch_size", "seed",
                  "pipeline", "aux_prompt_loss_weight", "tanh_prompt"});
    cfg.train.epochs = get_or<int>(t, "epochs", cfg.train.epochs);
    cfg.train.patience = get_or<int>(t, "patience", cfg.train.patience);
    cfg.train.learning_rate =
        get_or<double>(t, "learning_rate", cfg.train.learning_rate);
    cfg.train.batch_size = get_or<int>(t, "batch_size", cfg.train.batch_size);
    cfg.train.seed = get_or<uint64_t>(t, "seed", cfg.train.seed);
    cfg.train.pipeline = pipeline_from_string(
        get_or<std::string>(t, "pipeline", to_string(cfg.train.pipeline)));
    cfg.train.aux_prompt_loss_weight = get_or<double>(
        t, "aux_prompt_loss_weight", cfg.train.aux_prompt_loss_weight);
    cfg.train.tanh_prompt = get_or<bool>(t, "tanh_prompt", cfg.train.tanh_prompt);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    require_keys(e, "eval", {"per_slice", "threshold"});
    cfg.eval.per_slice = get_or<bool>(e, "per_slice", cfg.eval.per_slice);
    cfg.eval.threshold = get_or<double>(e, "threshold", cfg.eval.threshold);
  }
  cfg.validate();
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  return {
      {"data",
       {{"root", data.root},
        {"mr_sequence", to_string(data.mr_sequence)},
        {"synthetic", data.synthetic},
        {"synthetic_ct", data.synthetic_ct},
        {"synthetic_mr", data.synthetic_mr},
        {"synthetic_slices", data.synthetic_slices},
        {"synthetic_seed", data.synthetic_seed}}},
      {"edm",
       {{"detector", to_string(edm.detector)},
        {"sigma", edm.sigma},
        {"low", edm.low},
        {"high", edm.high}}},
      {"prompt_net",
       {{"depth", prompt_net.depth}, {"base_channels", prompt_net.base_channels}}},
      {"backend",
       {{"kind", to_string(backend.kind)},
        {"checkpoint_path", backend.checkpoint_path},
        {"variant", backend.variant},
        {"device", backend.device}}},
      {"loss",
       {{"w_f", loss.w_f},
        {"w_d", loss.w_d},
        {"w_lcd", loss.w_lcd},
        {"alpha_t", loss.alpha_t},
        {"gamma", loss.gamma},
        {"dice_eps", loss.dice_eps},
        {"per_image_dice", loss.per_image_dice}}},
      {"train",
       {{"epochs", train.epochs},
        {"patience", train.patience},
        {"learning_rate", train.learning_rate},
        {"batch_size", train.batch_size},
        {"seed", train.seed},
        {"pipeline", to_string(train.pipeline)},
        {"aux_prompt_loss_weight", train.aux_prompt_loss_weight},
        {"tanh_prompt", train.tanh_prompt}}},
      {"eval", {{"per_slice", eval.per_slice}, {"threshold", eval.threshold}}}};
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write config snapshot: " + path.string());
  os << to_json().dump(2) << '\n';
}

}  // namespace e2p
