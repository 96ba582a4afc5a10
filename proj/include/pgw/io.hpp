#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgw/experiments.hpp"
#include "pgw/fw_solver.hpp"
#include "pgw/types.hpp"

// File formats:
//   - point clouds: CSV, one point per row, final column optionally the
//     weight; or JSON {"points": [[...]], "weights": [...]} with "weights"
//     optional. Missing weights default to uniform 1/n.
//   - solve reports: JSON with the plan dense up to 200x200 and as
//     thresholded (i, j, mass) triples above that.
//   - correspondences: JSON {"pairs": [[i, j, mass], ...], "pgw_value": v,
//     "seed": s}.
//   - benchmark tables: CSV with header n,m,lambda,variant,iters,seconds,
//     pgw_value,mass.

namespace pgw {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, long line, long column)
        : std::runtime_error(message + " at line " + std::to_string(line) + ", column " +
                             std::to_string(column)),
          line_(line), column_(column) {}

    long line() const { return line_; }
    long column() const { return column_; }

private:
    long line_;
    long column_;
};

struct PointCloud {
    Eigen::MatrixXd points;   // one point per row
    Eigen::VectorXd weights;  // uniform 1/n when the input carries none
};

PointCloud load_csv(std::istream& in, bool has_weights);
PointCloud load_json(std::istream& in);

/// Dispatches on the file extension: ".json" goes to the JSON reader,
/// anything else is treated as CSV. Throws std::runtime_error when the file
/// cannot be opened; ParseError on malformed content.
PointCloud load_point_cloud(const std::string& path, bool csv_has_weights = false);

/// Report JSON; plans larger than dense_limit on either side are written as
/// sparse triples of the nonzero entries.
void write_solve_report_json(std::ostream& out, const SolveReport<double>& report,
                             const std::string& solver_name, double lambda,
                             Eigen::Index dense_limit = 200);
void write_solve_report_json(const std::string& path, const SolveReport<double>& report,
                             const std::string& solver_name, double lambda,
                             Eigen::Index dense_limit = 200);

void write_correspondences_json(std::ostream& out, const MatchResult& result, std::uint64_t seed);
void write_correspondences_json(const std::string& path, const MatchResult& result,
                                std::uint64_t seed);

std::string bench_csv_header();
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);
void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows);

}  // namespace pgw
