#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpapml::learners::io {

// Round-trippable decimal text for doubles.
inline std::string num(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

inline void write_vec(std::ostream& out, const std::string& key, const std::vector<double>& v) {
    out << key << " " << v.size();
    for (double x : v) out << " " << num(x);
    out << "\n";
}

inline void expect_key(std::istream& in, const std::string& key) {
    std::string k;
    in >> k;
    if (k != key) throw std::runtime_error("model file: expected '" + key + "', got '" + k + "'");
}

inline double read_num(std::istream& in, const std::string& key) {
    expect_key(in, key);
    double v = 0;
    in >> v;
    if (!in) throw std::runtime_error("model file: bad number for '" + key + "'");
    return v;
}

inline std::string read_word(std::istream& in, const std::string& key) {
    expect_key(in, key);
    std::string v;
    in >> v;
    return v;
}

inline std::vector<double> read_vec(std::istream& in, const std::string& key) {
    expect_key(in, key);
    std::size_t n = 0;
    in >> n;
    std::vector<double> v(n);
    for (auto& x : v) in >> x;
    if (!in) throw std::runtime_error("model file: truncated vector '" + key + "'");
    return v;
}

}  // namespace cpapml::learners::io
