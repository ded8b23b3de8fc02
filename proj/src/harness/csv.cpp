#include "dyncomp/harness/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dyncomp/errors.hpp"

namespace dyncomp::harness {

std::string CsvDocument::meta(const std::string& key) const {
    for (const auto& [k, v] : metadata) {
        if (k == key) return v;
    }
    return {};
}

std::size_t CsvDocument::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ConfigError("table has no column '" + name + "'");
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

double parse_number(const std::string& text) {
    if (text == "nan") return std::nan("");
    if (text == "inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + text + "'");
    }
    if (used != text.size()) throw ConfigError("not a number: '" + text + "'");
    return v;
}

namespace {

void write_row(const std::vector<std::string>& cells, std::ostream& out) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
    }
    out << '\n';
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

void write_csv(const CsvDocument& doc, std::ostream& out) {
    for (const auto& [k, v] : doc.metadata) out << "# " << k << '=' << v << '\n';
    write_row(doc.header, out);
    for (const auto& row : doc.rows) write_row(row, out);
}

CsvDocument read_csv(std::istream& in) {
    CsvDocument doc;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!have_header && line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body[0] == ' ') body.erase(0, 1);
            const auto eq = body.find('=');
            if (eq == std::string::npos) {
                doc.metadata.emplace_back(body, "");
            } else {
                doc.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            }
            continue;
        }
        if (!have_header) {
            doc.header = split_row(line);
            have_header = true;
        } else {
            doc.rows.push_back(split_row(line));
        }
    }
    return doc;
}

void write_csv_file(const CsvDocument& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_csv(doc, out);
    out.flush();
    if (!out) throw Error("write failed for '" + path + "'");
}

CsvDocument read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    return read_csv(in);
}

std::string to_json(const CsvDocument& doc) {
    nlohmann::ordered_json j;
    j["metadata"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : doc.metadata) {
        // Repeated keys (warnings) become arrays.
        auto& slot = j["metadata"][k];
        if (slot.is_null()) {
            slot = v;
        } else {
            if (!slot.is_array()) slot = nlohmann::ordered_json::array({slot});
            slot.push_back(v);
        }
    }
    j["columns"] = doc.header;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : doc.rows) {
        auto r = nlohmann::ordered_json::array();
        for (const auto& cell : row) {
            double v = 0.0;
            bool numeric = !cell.empty();
            try {
                std::size_t used = 0;
                v = std::stod(cell, &used);
                numeric = numeric && used == cell.size() && std::isfinite(v);
            } catch (const std::exception&) {
                numeric = false;
            }
            if (numeric) {
                r.push_back(v);
            } else {
                r.push_back(cell);
            }
        }
        j["rows"].push_back(std::move(r));
    }
    return j.dump(2) + "\n";
}

}  // namespace dyncomp::harness
