/// @file harness.hpp
/// @brief Experiment configuration, the solve pipeline and CSV output.

#ifndef AMBDDC_HARNESS_HPP
#define AMBDDC_HARNESS_HPP

#include "ambddc/adaptive.hpp"
#include "ambddc/krylov.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ambddc {

/// Flat `key = value` file; `#` starts a comment.
class ConfigFile {
public:
    static ConfigFile parse(std::istream& in);
    static ConfigFile load(const std::filesystem::path& path);

    /// Applies "key=value"; later settings win.
    void set(const std::string& assignment);
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::optional<std::string> get(const std::string& key) const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

enum class RhsKind { uniform, random };

struct ExperimentConfig {
    int nx = 64;
    int ny = 64;
    ElasticMaterial material;
    int levels = 2;                 // L
    std::vector<LevelPlan> plans;   // levels - 1 entries
    ConstraintMode mode = ConstraintMode::corners;
    double tau = std::numeric_limits<double>::infinity();
    std::vector<double> sweep_taus;
    PcgOptions pcg;
    unsigned long long seed = 1;
    RhsKind rhs = RhsKind::uniform;
    bool reduced = true;
    Scaling scaling = Scaling::stiffness;
    bool promote_corners = true;
    bool dump_matrices = false;
    std::filesystem::path out = "results";

    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

/// Desk-scale defaults: 64x64 mesh, 4x4 substructures, 2x2 on level 2, one
/// jagged edge per level.
ExperimentConfig default_config();

/// Reads every known key; unknown keys are rejected.
ExperimentConfig make_config(const ConfigFile& file);

std::string mode_name(ConstraintMode mode);
std::string format_tau(double tau);

struct ResultRow {
    std::string label;        // c, c+e, or a tau value
    std::string nc;           // "n" or "n1+n2+..."
    double coarse_ratio = 0.0;  // C
    std::optional<double> omega_tilde;
    double kappa = 0.0;
    int iterations = 0;
};

struct ExperimentResult {
    ResultRow row;
    SolveReport solve;
    std::vector<LevelReport> levels;
    std::optional<IndicatorReport> indicator;
    double true_residual = 0.0;  // ||f - A u|| / ||f||
    bool converged = false;
};

std::string row_label(const ExperimentConfig& config);

/// Coarse dof counts per level in table notation.
std::string coarse_count_label(const std::vector<LevelReport>& levels);

/// Top-level and intermediate coarse problem sizes relative to the average
/// level 1 substructure problem.
double coarse_size_ratio(const std::vector<LevelReport>& levels);

/// Runs the pipeline; writes residual, spectra and partition CSVs to
/// config.out when `write_artifacts` is set.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_artifacts = true);

/// Setup only, returning per-level pair spectra.
std::vector<LevelReport> compute_spectra(const ExperimentConfig& config);

/// Rows sorted: c, c+e, then tau descending with infinity first.
void emit_table(std::ostream& out, std::vector<ResultRow> rows);
void emit_table(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
void emit_spectra(std::ostream& out, const std::vector<PairSpectrum>& spectra, int count = 8);
void emit_residual_history(std::ostream& out, const SolveReport& report);
void emit_partitions(std::ostream& out, const std::vector<LevelReport>& levels);

}  // namespace ambddc

#endif  // AMBDDC_HARNESS_HPP
