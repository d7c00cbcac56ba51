#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "netslab/errors.hpp"
#include "netslab/gene_network.hpp"

namespace netslab {

// Measurements for n subjects over G distinct genes, plus the response.
struct Dataset {
    Eigen::MatrixXd X;  // n x G, one column per distinct gene
    Eigen::VectorXd y;  // n
    std::vector<std::string> gene_ids;

    Index n() const { return X.rows(); }
    Index n_genes() const { return X.cols(); }
};

inline void validate_dataset(const Dataset& data) {
    if (data.n() < 2) throw input_error("dataset needs at least 2 subjects, got " + std::to_string(data.n()));
    if (data.n_genes() != static_cast<Index>(data.gene_ids.size()))
        throw input_error("dataset has " + std::to_string(data.n_genes()) + " columns but " +
                          std::to_string(data.gene_ids.size()) + " gene ids");
    if (data.y.size() != data.n())
        throw input_error("response length " + std::to_string(data.y.size()) + " does not match n = " +
                          std::to_string(data.n()));
    if (!data.X.allFinite() || !data.y.allFinite()) throw input_error("dataset contains non-finite entries");
    std::unordered_set<std::string> seen;
    for (const auto& id : data.gene_ids)
        if (!seen.insert(id).second) throw input_error("duplicate gene id '" + id + "' in dataset header");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        std::size_t start = 0;
        while (start < field.size() && field[start] == ' ') ++start;
        out.push_back(field.substr(start));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& context) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw input_error("cannot parse number '" + s + "' in " + context);
    return v;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// CSV with a header row of gene ids, one subject per row.
inline std::pair<Eigen::MatrixXd, std::vector<std::string>> read_x_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw input_error("'" + path + "' is empty");
    const auto ids = detail::split_csv_line(line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != ids.size())
            throw input_error("'" + path + "' row " + std::to_string(rows.size() + 2) + " has " +
                              std::to_string(fields.size()) + " fields, expected " + std::to_string(ids.size()));
        std::vector<double> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) row[j] = detail::parse_double(fields[j], path);
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd X(static_cast<Index>(rows.size()), static_cast<Index>(ids.size()));
    for (Index i = 0; i < X.rows(); ++i)
        for (Index j = 0; j < X.cols(); ++j) X(i, j) = rows[i][j];
    return {std::move(X), ids};
}

// Single-column CSV; a non-numeric first line is treated as a header.
inline Eigen::VectorXd read_y_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open '" + path + "'");
    std::vector<double> vals;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(line.c_str(), &end);
        if (end == line.c_str() || *end != '\0') {
            if (first) { first = false; continue; }
            throw input_error("cannot parse number '" + line + "' in " + path);
        }
        vals.push_back(v);
        first = false;
    }
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Index>(vals.size()));
}

inline void write_x_csv(const std::string& path, const Eigen::MatrixXd& X,
                        const std::vector<std::string>& gene_ids) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write '" + path + "'");
    for (std::size_t j = 0; j < gene_ids.size(); ++j) out << (j ? "," : "") << gene_ids[j];
    out << "\n";
    for (Index i = 0; i < X.rows(); ++i) {
        for (Index j = 0; j < X.cols(); ++j) out << (j ? "," : "") << detail::format_double(X(i, j));
        out << "\n";
    }
}

inline void write_y_csv(const std::string& path, const Eigen::VectorXd& y) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write '" + path + "'");
    out << "y\n";
    for (Index i = 0; i < y.size(); ++i) out << detail::format_double(y[i]) << "\n";
}

}  // namespace netslab
