#include "specflow/serialize.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "specflow/errors.hpp"

namespace specflow {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string pad(int indent) { return std::string(indent, ' '); }

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string matrix_to_json(const Eigen::MatrixXcd& m, int indent) {
    std::ostringstream os;
    os << "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << (i ? ",\n" : "\n") << pad(indent + 2) << "[";
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ", ";
            os << "{\"re\": " << format_double(m(i, j).real())
               << ", \"im\": " << format_double(m(i, j).imag()) << "}";
        }
        os << "]";
    }
    os << "\n" << pad(indent) << "]";
    return os.str();
}

Eigen::MatrixXcd matrix_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("matrix_from_json: ") + e.what());
    }
    if (!j.is_array() || j.empty()) {
        throw Error("matrix_from_json: expected a non-empty array of rows");
    }
    const size_t rows = j.size();
    const size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw Error("matrix_from_json: rows must be non-empty arrays");
    Eigen::MatrixXcd m(rows, cols);
    for (size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols) {
            throw Error("matrix_from_json: rows must all have the same length");
        }
        for (size_t k = 0; k < cols; ++k) {
            const nlohmann::json& e = j[i][k];
            if (!e.is_object() || !e.contains("re") || !e.contains("im")
                || !e["re"].is_number() || !e["im"].is_number()) {
                throw Error("matrix_from_json: entries must be {\"re\": x, \"im\": y} objects");
            }
            m(i, k) = std::complex<double>(e["re"].get<double>(), e["im"].get<double>());
        }
    }
    return m;
}

std::string flow_report_to_json(const FlowReport& r, int indent) {
    std::ostringstream os;
    const std::string p0 = pad(indent);
    const std::string p1 = pad(indent + 2);
    const std::string p2 = pad(indent + 4);
    os << "{\n";
    os << p1 << "\"method\": \"" << escape(r.method) << "\",\n";
    os << p1 << "\"value\": " << format_double(r.value) << ",\n";
    os << p1 << "\"integer\": " << r.integer << ",\n";
    os << p1 << "\"residual\": " << format_double(r.residual) << ",\n";
    os << p1 << "\"terms\": {\n";
    os << p2 << "\"integral\": " << format_double(r.terms.integral) << ",\n";
    os << p2 << "\"endpoint_b\": " << format_double(r.terms.endpoint_b) << ",\n";
    os << p2 << "\"endpoint_a\": " << format_double(r.terms.endpoint_a) << "\n";
    os << p1 << "},\n";
    os << p1 << "\"diagnostics\": {\n";
    os << p2 << "\"quadrature_error\": " << format_double(r.diagnostics.quadrature_error)
       << ",\n";
    os << p2 << "\"refinement_depth\": " << r.diagnostics.refinement_depth << ",\n";
    os << p2 << "\"evaluations\": " << r.diagnostics.evaluations << ",\n";
    os << p2 << "\"crossings\": [";
    for (size_t i = 0; i < r.diagnostics.crossings.size(); ++i) {
        const CrossingRecord& c = r.diagnostics.crossings[i];
        if (i) os << ", ";
        os << "{\"t\": " << format_double(c.t) << ", \"branch\": " << c.branch
           << ", \"direction\": " << c.direction << "}";
    }
    os << "],\n";
    os << p2 << "\"warnings\": [";
    for (size_t i = 0; i < r.diagnostics.warnings.size(); ++i) {
        if (i) os << ", ";
        os << "\"" << escape(r.diagnostics.warnings[i]) << "\"";
    }
    os << "]\n";
    os << p1 << "},\n";
    os << p1 << "\"flagged\": " << (r.flagged ? "true" : "false") << "\n";
    os << p0 << "}";
    return os.str();
}

std::string csv_report_header() {
    return "method,value,integer,residual,term_integral,term_endpoint_b,term_endpoint_a,"
           "quadrature_error,refinement_depth,evaluations,flagged";
}

std::string flow_report_to_csv_row(const FlowReport& r) {
    std::ostringstream os;
    os << r.method << "," << format_double(r.value) << "," << r.integer << ","
       << format_double(r.residual) << "," << format_double(r.terms.integral) << ","
       << format_double(r.terms.endpoint_b) << "," << format_double(r.terms.endpoint_a) << ","
       << format_double(r.diagnostics.quadrature_error) << "," << r.diagnostics.refinement_depth
       << "," << r.diagnostics.evaluations << "," << (r.flagged ? 1 : 0);
    return os.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.parent_path()
                         / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace specflow
