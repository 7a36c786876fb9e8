#include "stiffen/bspline.hpp"

#include "stiffen/mesh_io.hpp"

#include <fstream>
#include <sstream>

namespace stiffen {

namespace {

double next_double(std::istream& in, const char* what)
{
    std::string tok;
    if (!(in >> tok)) throw IoError(std::string("field file truncated while reading ") + what);
    return parse_double(tok);
}

int next_int(std::istream& in, const char* what)
{
    long long v = 0;
    if (!(in >> v)) throw IoError(std::string("field file: expected integer for ") + what);
    return static_cast<int>(v);
}

}  // namespace

void write_field(std::ostream& out, const BSplineHeightField<double>& field)
{
    out << "bspline " << field.p() << ' ' << field.q() << ' ' << field.n() << ' ' << field.m() << ' '
        << format_double(field.h_max()) << ' ' << field.chart_id() << '\n';
    for (const auto* knots : {&field.knots_u(), &field.knots_v()}) {
        for (std::size_t i = 0; i < knots->size(); ++i) out << (i ? " " : "") << format_double((*knots)[i]);
        out << '\n';
    }
    for (int i = 0; i < field.n(); ++i) {
        for (int j = 0; j < field.m(); ++j) out << (j ? " " : "") << format_double(field.control()(i, j));
        out << '\n';
    }
}

BSplineHeightField<double> read_field(std::istream& in)
{
    std::string magic;
    if (!(in >> magic) || magic != "bspline") throw IoError("field file must start with 'bspline'");
    const int p = next_int(in, "p"), q = next_int(in, "q"), n = next_int(in, "n"), m = next_int(in, "m");
    const double h_max = next_double(in, "H_max");
    const int chart = next_int(in, "chart");
    if (p < 0 || q < 0 || n < p + 1 || m < q + 1) throw IoError("field file: inconsistent sizes");
    std::vector<double> ku(static_cast<std::size_t>(n + p + 1)), kv(static_cast<std::size_t>(m + q + 1));
    for (auto& k : ku) k = next_double(in, "u knots");
    for (auto& k : kv) k = next_double(in, "v knots");
    Eigen::MatrixXd c(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) c(i, j) = next_double(in, "control heights");
    return BSplineHeightField<double>(p, q, std::move(ku), std::move(kv), std::move(c), h_max, chart);
}

void write_field_file(const std::string& path, const BSplineHeightField<double>& field)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write_field(out, field);
}

BSplineHeightField<double> read_field_file(const std::string& path)
{
    std::istringstream in(read_file(path));
    return read_field(in);
}

}  // namespace stiffen
