#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "specmim/design.hpp"
#include "specmim/model.hpp"
#include "specmim/simulate.hpp"
#include "specmim/theory.hpp"

namespace specmim::cli {

using nlohmann::json;

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitSolverFailure = 3;
inline constexpr int kExitCheckFailure = 4;

struct Overrides {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> quad_nodes;
};

// Parsed experiment description: the model/signals/preprocessing triple plus
// per-subcommand sections, with overrides already applied.
struct RunConfig {
    json raw;
    std::string config_hash;
    std::filesystem::path out_dir = "out";
    int threads = 1;

    LinkModel model;
    SignalSpec signals = make_signals_orthonormal(1);
    Preprocessing preproc;
    QuadratureRule quadrature;
    // theory-side laws use the conditioned response grid unless the config
    // pins an explicit rule
    bool quad_explicit = false;
};

std::uint64_t fnv1a64(const std::string& bytes);

RunConfig load_config(const std::string& path, const Overrides& overrides);

// Builders used by both the CLI and the bindings.
LinkModel build_model(const json& spec);
SignalSpec build_signals(const json& spec);
Preprocessing build_preprocessing(const json& spec, const LinkModel& model,
                                  const SignalSpec& signals);
QuadratureRule build_quadrature(const json& spec, int dims);

int cmd_simulate(const RunConfig& cfg);
int cmd_predict(const RunConfig& cfg);
int cmd_design(const RunConfig& cfg);
int cmd_threshold(const RunConfig& cfg);
int cmd_oracle_check(const RunConfig& cfg);

int log_level();  // from SPECTRAL_MIM_LOG: 0 quiet, 1 info, 2 debug

}  // namespace specmim::cli
