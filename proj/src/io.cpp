#include "pgw/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace pgw {

namespace {

using nlohmann::json;

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open output file: " + path);
    return out;
}

Eigen::VectorXd uniform_or(const std::vector<double>& weights, Eigen::Index n) {
    if (weights.empty())
        return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i)
        w[i] = weights[static_cast<std::size_t>(i)];
    return w;
}

}  // namespace

PointCloud load_csv(std::istream& in, bool has_weights) {
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::vector<double> fields;
        std::size_t start = 0;
        long column = 1;
        while (start <= line.size()) {
            std::size_t end = line.find(',', start);
            if (end == std::string::npos)
                end = line.size();
            const std::string token = line.substr(start, end - start);
            try {
                std::size_t used = 0;
                const double value = std::stod(token, &used);
                while (used < token.size() &&
                       (token[used] == ' ' || token[used] == '\t' || token[used] == '\r'))
                    ++used;
                if (used != token.size())
                    throw std::invalid_argument("trailing characters");
                fields.push_back(value);
            } catch (const std::exception&) {
                throw ParseError("malformed CSV number '" + token + "'", line_no, column);
            }
            ++column;
            start = end + 1;
            if (end == line.size())
                break;
        }
        if (!rows.empty() && fields.size() != rows.front().size())
            throw ParseError("inconsistent CSV column count", line_no, 1);
        rows.push_back(std::move(fields));
    }
    if (rows.empty())
        throw ParseError("empty point cloud", std::max(line_no, 1L), 1);

    const auto cols = static_cast<Eigen::Index>(rows.front().size());
    const auto dims = has_weights ? cols - 1 : cols;
    if (dims < 1)
        throw ParseError("CSV rows need at least one coordinate column", 1, 1);

    PointCloud cloud;
    cloud.points.resize(static_cast<Eigen::Index>(rows.size()), dims);
    cloud.weights.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (Eigen::Index d = 0; d < dims; ++d)
            cloud.points(static_cast<Eigen::Index>(r), d) = rows[r][static_cast<std::size_t>(d)];
        cloud.weights[static_cast<Eigen::Index>(r)] =
            has_weights ? rows[r].back() : 1.0 / static_cast<double>(rows.size());
    }
    return cloud;
}

PointCloud load_json(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), 1,
                         static_cast<long>(e.byte));
    }
    if (!doc.contains("points") || !doc["points"].is_array() || doc["points"].empty())
        throw ParseError("JSON point cloud needs a nonempty 'points' array", 1, 1);

    const auto& pts = doc["points"];
    const auto n = static_cast<Eigen::Index>(pts.size());
    const auto dims = static_cast<Eigen::Index>(pts[0].size());
    if (dims < 1)
        throw ParseError("JSON points need at least one coordinate", 1, 1);

    PointCloud cloud;
    cloud.points.resize(n, dims);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = pts[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != dims)
            throw ParseError("JSON point " + std::to_string(i) + " has inconsistent dimension", 1,
                             1);
        for (Eigen::Index d = 0; d < dims; ++d) {
            if (!row[static_cast<std::size_t>(d)].is_number())
                throw ParseError("JSON point " + std::to_string(i) + " has a non-numeric entry", 1,
                                 1);
            cloud.points(i, d) = row[static_cast<std::size_t>(d)].get<double>();
        }
    }
    std::vector<double> weights;
    if (doc.contains("weights")) {
        if (!doc["weights"].is_array() || static_cast<Eigen::Index>(doc["weights"].size()) != n)
            throw ParseError("JSON 'weights' must match the point count", 1, 1);
        for (const auto& w : doc["weights"]) {
            if (!w.is_number())
                throw ParseError("JSON 'weights' has a non-numeric entry", 1, 1);
            weights.push_back(w.get<double>());
        }
    }
    cloud.weights = uniform_or(weights, n);
    return cloud;
}

PointCloud load_point_cloud(const std::string& path, bool csv_has_weights) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open input file: " + path);
    const bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
    return is_json ? load_json(in) : load_csv(in, csv_has_weights);
}

void write_solve_report_json(std::ostream& out, const SolveReport<double>& report,
                             const std::string& solver_name, double lambda,
                             Eigen::Index dense_limit) {
    json doc;
    doc["solver"] = solver_name;
    doc["lambda"] = lambda;
    doc["pgw_value"] = report.pgw_value;
    doc["transported_mass"] = report.transported_mass;
    doc["iterations"] = report.iterations;
    doc["termination"] = to_string(report.termination);
    doc["stop_reason"] = to_string(report.stop_reason);
    doc["wall_seconds"] = report.wall_seconds;
    doc["objective_trace"] = report.objective_trace;
    doc["gap_trace"] = report.gap_trace;
    doc["alpha_trace"] = report.alpha_trace;

    const Eigen::MatrixXd& plan = report.plan.matrix();
    if (plan.rows() <= dense_limit && plan.cols() <= dense_limit) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < plan.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < plan.cols(); ++j)
                row.push_back(plan(i, j));
            rows.push_back(std::move(row));
        }
        doc["plan"] = std::move(rows);
    } else {
        json triples = json::array();
        for (Eigen::Index i = 0; i < plan.rows(); ++i)
            for (Eigen::Index j = 0; j < plan.cols(); ++j)
                if (plan(i, j) > 0)
                    triples.push_back(json::array({i, j, plan(i, j)}));
        doc["plan_triples"] = std::move(triples);
        doc["plan_shape"] = json::array({plan.rows(), plan.cols()});
    }
    out << doc.dump(2) << "\n";
}

void write_solve_report_json(const std::string& path, const SolveReport<double>& report,
                             const std::string& solver_name, double lambda,
                             Eigen::Index dense_limit) {
    auto out = open_output(path);
    write_solve_report_json(out, report, solver_name, lambda, dense_limit);
}

void write_correspondences_json(std::ostream& out, const MatchResult& result, std::uint64_t seed) {
    json doc;
    json pairs = json::array();
    for (const Correspondence& c : result.pairs)
        pairs.push_back(json::array({c.i, c.j, c.mass}));
    doc["pairs"] = std::move(pairs);
    doc["pgw_value"] = result.pgw_value;
    doc["transported_mass"] = result.transported_mass;
    doc["seed"] = seed;
    json flow = json::array();
    for (int a = 0; a < 2; ++a)
        flow.push_back(json::array({result.component_mass(a, 0), result.component_mass(a, 1)}));
    doc["component_mass"] = std::move(flow);
    out << doc.dump(2) << "\n";
}

void write_correspondences_json(const std::string& path, const MatchResult& result,
                                std::uint64_t seed) {
    auto out = open_output(path);
    write_correspondences_json(out, result, seed);
}

std::string bench_csv_header() { return "n,m,lambda,variant,iters,seconds,pgw_value,mass"; }

namespace {

// shortest representation that round-trips
std::string fmt(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

}  // namespace

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << bench_csv_header() << "\n";
    for (const BenchRow& row : rows) {
        out << row.n << "," << row.m << "," << fmt(row.lambda) << ","
            << (row.variant == SolverVariant::v1 ? "v1" : "v2") << "," << row.iterations << ","
            << fmt(row.seconds) << "," << fmt(row.pgw_value) << "," << fmt(row.mass) << "\n";
    }
}

void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
    auto out = open_output(path);
    write_bench_csv(out, rows);
}

}  // namespace pgw
