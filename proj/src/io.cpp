#include "tvcsl/io.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tvcsl {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& raw, int line_no, const std::string& what) {
    const std::string s = trim(raw);
    std::string lower = s;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "inf" || lower == "+inf" || lower == "infinity") return kInfTime;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse " +
                                 what + " value '" + s + "'");
    }
    return v;
}

std::int64_t parse_id(const std::string& raw, int line_no) {
    const std::string s = trim(raw);
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse id '" +
                                 s + "'");
    }
    return v;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    auto header = split_csv_line(line);
    if (header.size() < 4 || trim(header.front()) != "id" ||
        trim(header[header.size() - 3]) != "adoption_time" ||
        trim(header[header.size() - 2]) != "observed_time" ||
        trim(header.back()) != "event") {
        throw std::runtime_error(path +
                                 ": header must be id,<covariates...>,adoption_time,"
                                 "observed_time,event");
    }
    Dataset data;
    data.p = static_cast<int>(header.size()) - 4;
    for (std::size_t j = 1; j + 3 < header.size(); ++j) {
        data.column_names.push_back(trim(header[j]));
    }
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != header.size()) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(header.size()) +
                                     " fields, got " + std::to_string(f.size()));
        }
        SubjectRecord s;
        s.id = parse_id(f[0], line_no);
        s.x.resize(data.p);
        for (int j = 0; j < data.p; ++j) {
            s.x[j] = parse_double(f[1 + j], line_no, data.column_names[j]);
        }
        s.adoption_time = parse_double(f[f.size() - 3], line_no, "adoption_time");
        s.observed_time = parse_double(f[f.size() - 2], line_no, "observed_time");
        const double ev = parse_double(f[f.size() - 1], line_no, "event");
        if (ev != 0.0 && ev != 1.0) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": event must be 0 or 1");
        }
        s.event = ev == 1.0;
        data.subjects.push_back(std::move(s));
    }
    validate(data);
    return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    out << "id";
    for (const auto& name : data.column_names) out << ',' << name;
    out << ",adoption_time,observed_time,event\n";
    out.precision(17);
    for (const auto& s : data.subjects) {
        out << s.id;
        for (double v : s.x) out << ',' << v;
        if (std::isinf(s.adoption_time)) {
            out << ",inf";
        } else {
            out << ',' << s.adoption_time;
        }
        out << ',' << s.observed_time << ',' << (s.event ? 1 : 0) << '\n';
    }
}

void write_truth_csv(const std::vector<TruthRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write truth file: " + path);
    out << "id,tau_true,eta0_true\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.id << ',' << r.tau_true << ',' << r.eta0_true << '\n';
    }
}

std::vector<TruthRow> read_truth_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open truth file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    if (trim(line) != "id,tau_true,eta0_true") {
        throw std::runtime_error(path + ": unexpected truth header");
    }
    std::vector<TruthRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 3) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected 3 fields");
        }
        rows.push_back({parse_id(f[0], line_no), parse_double(f[1], line_no, "tau_true"),
                        parse_double(f[2], line_no, "eta0_true")});
    }
    return rows;
}

}  // namespace tvcsl
