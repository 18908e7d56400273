#pragma once

#include "citysplat/core/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citysplat::io {

/// Foreground box for contraction. When `z_from_data` is set the z extent is
/// taken from the Gaussian positions at partition time.
struct ForegroundBounds {
    Eigen::Vector3d min = Eigen::Vector3d::Zero();
    Eigen::Vector3d max = Eigen::Vector3d::Zero();
    bool z_from_data = true;
};

/// Pipeline parameters. Defaults are the MatrixCity settings; `dataset`
/// selects another published preset as the base before explicit keys apply.
struct RunConfig {
    std::string dataset;
    std::optional<ForegroundBounds> foreground; ///< unset: central third of the scene's x-y extent
    GridDims block_dims{6, 6, 1};
    double ssim_threshold = 0.05;
    double n_mad = 4.0;
    DistanceIntervals distance_intervals = DistanceIntervals::from_edges({200.0, 400.0});
    std::vector<double> compression_rates{0.5, 0.34, 0.25}; ///< finest level first
    double loss_lambda = 0.2;
    std::vector<int> lod_sh_degrees{3, 2, 1}; ///< same order as compression_rates

    int assignment_downscale = 4;
    std::size_t min_block_count = 25000;
    int finetune_iterations = 30000;
    Eigen::Vector3f background = Eigen::Vector3f::Zero();

    /// Throws ConfigError describing the first violated invariant.
    void validate() const;
};

/// Preset for one of matrixcity, rubble, building, residence, sciart
/// (case-insensitive). Throws ConfigError for unknown names.
RunConfig dataset_preset(std::string_view dataset);

/// Parses a flat JSON object. Recognised keys: dataset, foreground_min,
/// foreground_max, block_dims, ssim_threshold, n_mad, distance_intervals,
/// compression_rates, loss_lambda, lod_sh_degrees, assignment_downscale,
/// min_block_count, finetune_iterations, background. Unknown keys are an error.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

std::string dump_config(const RunConfig& config);

/// Parses `[[0,200],[200,400],[400,null]]`; null, "inf" and "infinity" mean unbounded.
DistanceIntervals parse_intervals(std::string_view json_text);

} // namespace citysplat::io
