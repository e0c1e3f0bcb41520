#include "tvcsl/grid.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tvcsl {

namespace {

struct Scalar {
    enum class Kind { string, integer, real, boolean } kind;
    std::string s;
    std::int64_t i = 0;
    double d = 0.0;
    bool b = false;
};

struct Entry {
    std::vector<Scalar> values;
    bool is_array = false;
    int line = 0;
};

[[noreturn]] void fail(int line, const std::string& what) {
    throw std::invalid_argument("grid file, line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Cuts a trailing # comment, honoring quoted strings.
std::string strip_comment(const std::string& s) {
    char quote = '\0';
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (quote != '\0') {
            if (c == '\\' && quote == '"') {
                ++i;
            } else if (c == quote) {
                quote = '\0';
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            return s.substr(0, i);
        }
    }
    return s;
}

Scalar parse_scalar(const std::string& token, int line) {
    Scalar out;
    if (token.empty()) fail(line, "empty value");
    if (token.front() == '"' || token.front() == '\'') {
        const char quote = token.front();
        if (token.size() < 2 || token.back() != quote) {
            fail(line, "unterminated string " + token);
        }
        out.kind = Scalar::Kind::string;
        if (quote == '\'') {
            out.s = token.substr(1, token.size() - 2);
        } else {
            for (std::size_t i = 1; i + 1 < token.size(); ++i) {
                if (token[i] == '\\') {
                    if (i + 2 >= token.size()) fail(line, "dangling escape in " + token);
                    ++i;
                }
                out.s += token[i];
            }
        }
        return out;
    }
    if (token == "true" || token == "false") {
        out.kind = Scalar::Kind::boolean;
        out.b = token == "true";
        return out;
    }
    try {
        std::size_t used = 0;
        if (token.find_first_of(".eE") == std::string::npos) {
            out.kind = Scalar::Kind::integer;
            out.i = std::stoll(token, &used);
        } else {
            out.kind = Scalar::Kind::real;
            out.d = std::stod(token, &used);
        }
        if (used != token.size()) fail(line, "trailing characters in number " + token);
    } catch (const std::invalid_argument&) {
        fail(line, "cannot parse value '" + token + "' (strings must be quoted)");
    } catch (const std::out_of_range&) {
        fail(line, "number out of range: " + token);
    }
    return out;
}

// Splits "[a, b, c]" at top-level commas, honoring quotes.
std::vector<Scalar> parse_array(const std::string& body, int line) {
    std::vector<Scalar> out;
    std::string token;
    char quote = '\0';
    auto flush = [&](bool final) {
        const std::string t = trim(token);
        token.clear();
        if (t.empty()) {
            if (!final) fail(line, "empty array element");
            return;  // trailing comma or empty array
        }
        out.push_back(parse_scalar(t, line));
    };
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (quote != '\0') {
            token += c;
            if (c == '\\' && quote == '"' && i + 1 < body.size()) {
                token += body[++i];
            } else if (c == quote) {
                quote = '\0';
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
            token += c;
        } else if (c == ',') {
            flush(false);
        } else {
            token += c;
        }
    }
    if (quote != '\0') fail(line, "unterminated string in array");
    flush(true);
    return out;
}

std::map<std::string, Entry> parse_entries(const std::string& text) {
    std::map<std::string, Entry> entries;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[' && line.find('=') == std::string::npos) {
            if (line.back() != ']') fail(line_no, "malformed section header " + line);
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name != "grid") fail(line_no, "unknown section [" + name + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail(line_no, "missing key");
        for (char c : key) {
            if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '_') {
                fail(line_no, "invalid key '" + key + "'");
            }
        }
        if (entries.count(key) != 0) fail(line_no, "duplicate key '" + key + "'");
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) fail(line_no, "missing value for '" + key + "'");
        Entry entry;
        entry.line = line_no;
        if (value.front() == '[') {
            if (value.back() != ']') fail(line_no, "unterminated array for '" + key + "'");
            entry.is_array = true;
            entry.values = parse_array(value.substr(1, value.size() - 2), line_no);
        } else {
            entry.values.push_back(parse_scalar(value, line_no));
        }
        entries.emplace(key, std::move(entry));
    }
    return entries;
}

std::int64_t as_int(const Scalar& v, const std::string& key, int line) {
    if (v.kind != Scalar::Kind::integer) fail(line, "'" + key + "' must be an integer");
    return v.i;
}

double as_double(const Scalar& v, const std::string& key, int line) {
    if (v.kind == Scalar::Kind::real) return v.d;
    if (v.kind == Scalar::Kind::integer) return static_cast<double>(v.i);
    fail(line, "'" + key + "' must be a number");
}

std::string as_string(const Scalar& v, const std::string& key, int line) {
    if (v.kind != Scalar::Kind::string) fail(line, "'" + key + "' must be a quoted string");
    return v.s;
}

}  // namespace

GridConfig parse_grid_text(const std::string& text) {
    auto entries = parse_entries(text);
    GridConfig config;

    auto take = [&](const std::string& key) -> const Entry* {
        auto it = entries.find(key);
        return it == entries.end() ? nullptr : &it->second;
    };
    auto consume = [&](const std::string& key) { entries.erase(key); };

    if (const Entry* e = take("n")) {
        config.n.clear();
        for (const auto& v : e->values) {
            const std::int64_t n = as_int(v, "n", e->line);
            if (n < 2) fail(e->line, "n must be >= 2");
            config.n.push_back(static_cast<int>(n));
        }
        consume("n");
    }
    if (config.n.empty()) {
        throw std::invalid_argument("grid file: required key 'n' is missing or empty");
    }
    if (const Entry* e = take("method")) {
        config.methods.clear();
        for (const auto& v : e->values) {
            const std::string m = as_string(v, "method", e->line);
            if (m != "s-lasso" && m != "tv-csl") {
                fail(e->line, "method must be \"s-lasso\" or \"tv-csl\", got \"" + m + "\"");
            }
            config.methods.push_back(m);
        }
        consume("method");
    }
    auto read_bases = [&](const std::string& key, std::vector<BasisKind>& dest) {
        if (const Entry* e = take(key)) {
            dest.clear();
            for (const auto& v : e->values) {
                try {
                    dest.push_back(parse_basis_kind(as_string(v, key, e->line)));
                } catch (const std::invalid_argument& err) {
                    fail(e->line, err.what());
                }
            }
            consume(key);
        }
    };
    read_bases("eta_basis", config.eta_bases);
    read_bases("hte_basis", config.hte_bases);
    if (const Entry* e = take("propensity")) {
        config.propensity.clear();
        for (const auto& v : e->values) {
            const std::string p = as_string(v, "propensity", e->line);
            if (p != "correct" && p != "misspecified") {
                fail(e->line,
                     "propensity must be \"correct\" or \"misspecified\", got \"" + p + "\"");
            }
            config.propensity.push_back(p);
        }
        consume("propensity");
    }
    auto read_scalar_int = [&](const std::string& key, auto& dest, std::int64_t lo) {
        if (const Entry* e = take(key)) {
            if (e->is_array) fail(e->line, "'" + key + "' must be a scalar");
            const std::int64_t v = as_int(e->values[0], key, e->line);
            if (v < lo) fail(e->line, "'" + key + "' must be >= " + std::to_string(lo));
            dest = static_cast<std::decay_t<decltype(dest)>>(v);
            consume(key);
        }
    };
    read_scalar_int("reps", config.reps, 1);
    read_scalar_int("base_seed", config.base_seed, 0);
    read_scalar_int("test_n", config.test_n, 2);
    if (const Entry* e = take("rate_floor")) {
        if (e->is_array) fail(e->line, "'rate_floor' must be a scalar");
        config.rate_floor = as_double(e->values[0], "rate_floor", e->line);
        if (config.rate_floor <= 0.0) fail(e->line, "'rate_floor' must be positive");
        consume("rate_floor");
    }

    if (!entries.empty()) {
        const auto& [key, entry] = *entries.begin();
        fail(entry.line, "unknown key '" + key + "'");
    }
    for (const auto& list :
         {config.methods, config.propensity}) {
        if (list.empty()) throw std::invalid_argument("grid file: empty list value");
    }
    if (config.eta_bases.empty() || config.hte_bases.empty()) {
        throw std::invalid_argument("grid file: empty basis list");
    }
    return config;
}

GridConfig parse_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grid file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_grid_text(buf.str());
}

std::vector<BenchCell> expand_grid(const GridConfig& config) {
    std::vector<BenchCell> cells;
    for (int n : config.n) {
        for (const auto& method : config.methods) {
            for (BasisKind eta : config.eta_bases) {
                for (BasisKind hte : config.hte_bases) {
                    for (const auto& prop : config.propensity) {
                        BenchCell cell;
                        cell.method = method;
                        cell.eta_basis.kind = eta;
                        cell.hte_basis.kind = hte;
                        cell.misspecified_propensity = prop == "misspecified";
                        cell.n = n;
                        cell.reps = config.reps;
                        cell.base_seed = config.base_seed;
                        cell.test_n = config.test_n;
                        cell.rate_floor = config.rate_floor;
                        cells.push_back(cell);
                    }
                }
            }
        }
    }
    return cells;
}

}  // namespace tvcsl
