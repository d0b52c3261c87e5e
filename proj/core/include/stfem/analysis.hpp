#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "stfem/mesh.hpp"
#include "stfem/ocp.hpp"
#include "stfem/targets.hpp"

namespace stfem {

/// Rule used for ||u_h - target||: `order` on the depth-`depth` red
/// subdivision, refined only where the target's probe reports a kink or jump.
struct ErrorQuadrature {
  int order = 2;
  int depth = 0;
};

/// Smooth: order 4 (order 5 for d = 4), no subdivision. Kinks: depth 3.
/// Jumps: depth 6.
ErrorQuadrature default_error_quadrature(const TargetSpec& target);

/// Squared L2 error per element of the P1 field given by per-vertex values.
std::vector<double> element_errors_squared(const Mesh& mesh, std::span<const double> vertex_values,
                                           const TargetSpec& target, const ErrorQuadrature& quad,
                                           int threads = 1);

/// ||u_h - target||_{L2(Q)}; element contributions are summed in element order.
double l2_error(const Mesh& mesh, std::span<const double> vertex_values, const TargetSpec& target,
                const ErrorQuadrature& quad, int threads = 1);
double l2_error(const OcpProblem& problem, const OcpSolution& solution, const TargetSpec& target,
                const ErrorQuadrature& quad);
double l2_error(const OcpProblem& problem, const OcpSolution& solution, const TargetSpec& target,
                int depth);

/// ||u_h||_{L2(Q)} = sqrt(u^T M u).
double state_l2_norm(const OcpProblem& problem, const OcpSolution& solution);

/// Closed form when known, otherwise computed with the target's error rule on
/// Kuhn(d, 8).
double target_l2_norm(const TargetSpec& target);

/// eoc_l = log(e_{l-1} / e_l) / log(h_ratio). Throws std::invalid_argument for
/// fewer than two errors or nonpositive values.
std::vector<double> eoc(std::span<const double> errors, double h_ratio = 2.0);

/// eoc_l = log(e_{l-1} / e_l) / log(h_{l-1} / h_l).
std::vector<double> eoc(std::span<const double> errors, std::span<const double> h);

enum class Coupling { RhoEqH2, FixedRho, Noise };
const char* to_string(Coupling coupling);

struct StudyConfig {
  int dim = 3;
  std::string target = "smooth";
  std::vector<int> levels;  ///< cells per axis m; h = 1/m
  Coupling coupling = Coupling::RhoEqH2;
  double fixed_rho = 0.0;
  std::vector<double> noise_deltas;  ///< noise coupling: h = 16 delta^2
  SolveOptions solver{};
  std::optional<int> error_depth;  ///< overrides the default subdivision depth
  int threads = 1;
  bool audit_meshes = true;
};

struct StudyRow {
  int level = 0;
  int m = 0;
  double h = 0.0;           ///< 1/m
  double h_diameter = 0.0;  ///< largest simplex diameter
  double rho = 0.0;
  double noise_delta = 0.0;
  std::size_t dofs_total = 0;
  std::size_t dofs_X = 0;
  std::size_t dofs_Y = 0;
  double error_L2 = 0.0;
  std::optional<double> eoc;
  int iterations = 0;
  double wall_time = 0.0;  ///< seconds for mesh, assembly, solve and error
  bool converged = false;
  double state_L2 = 0.0;
  double target_L2 = 0.0;
  double block_residual = 0.0;
  bool mesh_audit_ok = true;
  std::string message;  ///< failure description when the level did not complete
};

using RowCallback = std::function<void(const StudyRow&)>;

/// Validates a study configuration; throws std::invalid_argument.
void validate(const StudyConfig& config);

/// Target the state is compared against: the clean indicator for noisy data.
TargetSpec error_target_for(const TargetSpec& target);

/// Convergence study over the configured levels. Rows are handed to `on_row`
/// as soon as they are complete. Failed levels are recorded and the study
/// continues.
std::vector<StudyRow> run_study(const StudyConfig& config, const RowCallback& on_row = {});

/// h = 16 delta^2 (m = 1/h), rho = h^2, noisy data, error against the clean
/// indicator. Uses config.noise_deltas.
std::vector<StudyRow> run_noise_study(const StudyConfig& config, const RowCallback& on_row = {});

/// Cells per axis for a noise level; throws unless 16 delta^2 = 2^-k.
int noise_cells(double delta);

inline constexpr const char* kCsvHeader =
    "level,h,rho,dofs_total,dofs_X,dofs_Y,error_L2,eoc,iterations,wall_time_s";

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const StudyRow& row);
void write_csv(std::ostream& out, std::span<const StudyRow> rows);
/// Two columns: log2(h) and log2(error).
void write_gnuplot(std::ostream& out, std::span<const StudyRow> rows);
/// Aligned text table in the column order h | rho | error | eoc.
void write_table(std::ostream& out, std::span<const StudyRow> rows);

}  // namespace stfem
