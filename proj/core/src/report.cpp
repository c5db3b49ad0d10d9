#include "hypolab/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace hypolab {

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    if (header.empty()) throw Error("csv: header row is mandatory");
    append_record(header);
}

std::string CsvWriter::format(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

void CsvWriter::append_record(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) throw Error("csv: row width does not match header");
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) body_ += ',';
        const std::string& field = fields[i];
        bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
        if (!needs_quotes) {
            body_ += field;
            continue;
        }
        body_ += '"';
        for (char c : field) {
            if (c == '"') body_ += '"';
            body_ += c;
        }
        body_ += '"';
    }
    body_ += "\r\n";
}

void CsvWriter::add_row(const std::vector<std::string>& fields) { append_record(fields); }

void CsvWriter::add_row(const std::vector<double>& values) {
    std::vector<std::string> fields;
    fields.reserve(values.size());
    for (double v : values) fields.push_back(format(v));
    append_record(fields);
}

std::string CsvWriter::str() const { return body_; }

void CsvWriter::write(const std::string& path) const { write_text_file(path, body_); }

namespace {

Json vec_json(const Vec& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Json mat_json(const Mat& M) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        arr.push_back(row);
    }
    return arr;
}

}  // namespace

Json to_json(const SpanReport& report) {
    Json doc;
    doc["point"] = vec_json(report.point);
    doc["dimension"] = report.dimension;
    doc["depth_requested"] = report.depth_requested;
    doc["depth_used"] = report.depth_used;
    doc["tolerance"] = report.tolerance;
    doc["rank"] = report.rank;
    doc["singular_values"] = vec_json(report.singular_values);
    Json vectors = Json::array();
    for (const auto& [expr, value] : report.vectors) {
        Json entry;
        entry["expression"] = expr;
        entry["value"] = vec_json(value);
        vectors.push_back(entry);
    }
    doc["vectors"] = vectors;
    return doc;
}

Json to_json(const CovarianceReport& report) {
    Json doc;
    doc["t_index"] = report.t_index;
    doc["quadrature"] = report.quadrature;
    doc["C"] = mat_json(report.C);
    doc["gamma"] = mat_json(report.gamma);
    doc["gamma_eigenvalues"] = vec_json(report.gamma_eigenvalues);
    doc["min_eigenvalue"] = report.min_eigenvalue;
    return doc;
}

Json to_json(const AtomReport& report) {
    Json doc;
    doc["flag"] = report.flag;
    doc["largest_fraction"] = report.largest_fraction;
    Json locations = Json::array();
    for (const auto& loc : report.locations) locations.push_back(vec_json(loc));
    doc["locations"] = locations;
    return doc;
}

Json to_json(const KdeLadder& ladder) {
    Json doc;
    doc["coordinate"] = ladder.coordinate;
    doc["bandwidth"] = ladder.bandwidth;
    doc["l1_h_h2"] = ladder.l1_h_h2;
    doc["l1_h2_h4"] = ladder.l1_h2_h4;
    return doc;
}

Json to_json(const DensityReport& report) {
    Json doc;
    doc["model"] = report.model_name;
    doc["n_samples"] = report.n_samples;
    doc["blowups"] = report.blowups;
    doc["k"] = report.k;
    doc["span"] = to_json(report.span);
    doc["rank_full"] = report.rank_full;
    Json gamma;
    gamma["p10"] = report.gamma_p10;
    gamma["median"] = report.gamma_median;
    gamma["p90"] = report.gamma_p90;
    gamma["nondegenerate"] = report.gamma_nondegenerate;
    gamma["min_eigs"] = report.gamma_min_eigs;
    doc["gamma"] = gamma;
    doc["atoms"] = to_json(report.atoms);
    Json marginal = Json::array();
    for (const auto& entry : report.marginal_atoms) marginal.push_back(to_json(entry));
    doc["marginal_atoms"] = marginal;
    doc["any_atom"] = report.any_atom;
    Json ladders = Json::array();
    for (const auto& ladder : report.ladders) ladders.push_back(to_json(ladder));
    doc["kde"] = ladders;
    doc["l1_max"] = report.l1_max;
    doc["expect_density"] = report.expect_density;
    doc["observed"] = report.observed;
    doc["consistent"] = report.consistent;
    doc["chain"] = report.chain;
    return doc;
}

Json to_json(const std::vector<Gate>& gates) {
    Json arr = Json::array();
    for (const auto& gate : gates) {
        Json entry;
        entry["name"] = gate.name;
        entry["value"] = gate.value;
        entry["threshold"] = gate.threshold;
        entry["direction"] = gate.direction;
        entry["pass"] = gate.pass;
        arr.push_back(entry);
    }
    return arr;
}

bool all_pass(const std::vector<Gate>& gates) {
    for (const auto& gate : gates) {
        if (!gate.pass) return false;
    }
    return true;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw Error("write to '" + path + "' failed");
}

std::string render_json(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace hypolab
