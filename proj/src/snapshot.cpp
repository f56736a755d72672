#include "owr/snapshot.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "owr/errors.hpp"
#include "owr/matrix.hpp"
#include "owr/nbc.hpp"
#include "owr/ncm.hpp"
#include "owr/nno.hpp"

namespace owr::snapshot {

std::string real_to_text(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

double real_from_text(const std::string& token) {
    const char* begin = token.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin)
        throw ParseError("snapshot: bad real token '" + token + "'");
    return v;
}

} // namespace owr::snapshot

namespace owr {

namespace {

using snapshot::real_from_text;
using snapshot::real_to_text;

class TokenReader {
public:
    TokenReader(const std::string& path) : in_(path), path_(path) {
        if (!in_) throw ParseError(path + ": cannot open snapshot");
    }

    std::string next() {
        std::string tok;
        if (!(in_ >> tok))
            throw ParseError(path_ + ": unexpected end of snapshot");
        return tok;
    }

    void expect(const std::string& keyword) {
        std::string tok = next();
        if (tok != keyword)
            throw ParseError(path_ + ": expected '" + keyword + "', got '" + tok + "'");
    }

    double real() { return real_from_text(next()); }
    std::int64_t integer() {
        std::string tok = next();
        try {
            return std::stoll(tok);
        } catch (const std::exception&) {
            throw ParseError(path_ + ": bad integer token '" + tok + "'");
        }
    }
    std::size_t count() {
        std::int64_t v = integer();
        if (v < 0) throw ParseError(path_ + ": negative count");
        return static_cast<std::size_t>(v);
    }

private:
    std::ifstream in_;
    std::string path_;
};

void write_matrix(std::ostream& out, const Matrix& w) {
    out << "W";
    for (double v : w.data)
        out << ' ' << real_to_text(v);
    out << '\n';
}

Matrix read_matrix(TokenReader& r, std::size_t rows, std::size_t cols) {
    r.expect("W");
    Matrix w(rows, cols);
    for (double& v : w.data)
        v = r.real();
    return w;
}

void write_vector(std::ostream& out, const FeatureVector& v) {
    for (double x : v)
        out << ' ' << real_to_text(x);
}

FeatureVector read_vector(TokenReader& r, std::size_t d) {
    FeatureVector v(d);
    for (double& x : v)
        x = r.real();
    return v;
}

void write_ncm_body(std::ostream& out, const NcmClassifier& clf) {
    out << "d " << clf.dim() << "\n";
    out << "m " << clf.metric().rank() << "\n";
    out << "gamma " << real_to_text(clf.gamma()) << "\n";
    write_matrix(out, clf.metric().w());
    out << "classes " << clf.num_classes() << "\n";
    for (const auto& [id, cm] : clf.classes()) {
        out << "class " << id << ' ' << cm.n;
        write_vector(out, cm.mu);
        out << '\n';
    }
}

NcmClassifier read_ncm_body(TokenReader& r) {
    r.expect("d");
    const std::size_t d = r.count();
    r.expect("m");
    const std::size_t m = r.count();
    r.expect("gamma");
    const double gamma = r.real();
    NcmClassifier clf(d, m, gamma);
    clf.metric().set_w(read_matrix(r, m, d));
    r.expect("classes");
    const std::size_t n_classes = r.count();
    for (std::size_t i = 0; i < n_classes; ++i) {
        r.expect("class");
        const ClassId id = r.integer();
        ClassMean cm;
        cm.n = r.integer();
        cm.mu = read_vector(r, d);
        clf.set_class(id, std::move(cm));
    }
    return clf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot open for writing");
    return out;
}

} // namespace

void NcmClassifier::save(const std::string& path) const {
    std::ofstream out = open_out(path);
    out << "OWSNAP ncm 1\n";
    write_ncm_body(out, *this);
    out << "end\n";
}

NcmClassifier NcmClassifier::load(const std::string& path) {
    TokenReader r(path);
    r.expect("OWSNAP");
    r.expect("ncm");
    r.expect("1");
    NcmClassifier clf = read_ncm_body(r);
    r.expect("end");
    return clf;
}

void OnnoClassifier::save(const std::string& path) const {
    std::ofstream out = open_out(path);
    out << "OWSNAP onno 1\n";
    write_ncm_body(out, ncm_);
    out << "theta " << real_to_text(nov_.theta) << "\n";
    out << "tau " << real_to_text(nov_.tau) << "\n";
    out << "t " << nov_.t << "\n";
    out << "t_star " << nov_.t_star << "\n";
    out << "end\n";
}

OnnoClassifier OnnoClassifier::load(const std::string& path) {
    TokenReader r(path);
    r.expect("OWSNAP");
    r.expect("onno");
    r.expect("1");
    NcmClassifier ncm = read_ncm_body(r);
    OnnoClassifier clf(ncm.dim(), ncm.metric().rank(), ncm.gamma());
    clf.ncm() = std::move(ncm);
    r.expect("theta");
    clf.novelty().theta = r.real();
    r.expect("tau");
    clf.novelty().tau = r.real();
    r.expect("t");
    clf.novelty().t = r.integer();
    r.expect("t_star");
    clf.novelty().t_star = r.integer();
    r.expect("end");
    return clf;
}

void NbcClassifier::save(const std::string& path) const {
    std::ofstream out = open_out(path);
    out << "OWSNAP nbc 1\n";
    out << "d " << dim() << "\n";
    out << "m " << metric_.rank() << "\n";
    out << "gamma " << real_to_text(gamma_) << "\n";
    out << "d_hat " << d_hat_ << "\n";
    write_matrix(out, metric_.w());
    out << "tau " << real_to_text(nov_.tau) << "\n";
    out << "t_star " << nov_.t_star << "\n";
    out << "t " << nov_.t << "\n";
    out << "balls " << balls_.size() << "\n";
    for (const Ball& b : balls_) {
        out << "ball " << real_to_text(b.radius) << ' ' << real_to_text(b.radius_initial)
            << ' ' << b.errors;
        write_vector(out, b.center);
        out << " counts " << b.class_counts.size();
        for (const auto& [id, count] : b.class_counts)
            out << ' ' << id << ' ' << count;
        out << '\n';
    }
    out << "end\n";
}

NbcClassifier NbcClassifier::load(const std::string& path) {
    TokenReader r(path);
    r.expect("OWSNAP");
    r.expect("nbc");
    r.expect("1");
    r.expect("d");
    const std::size_t d = r.count();
    r.expect("m");
    const std::size_t m = r.count();
    r.expect("gamma");
    const double gamma = r.real();
    r.expect("d_hat");
    const std::size_t d_hat = r.count();
    NbcClassifier clf(d, m, gamma);
    clf.set_d_hat(d_hat);
    clf.metric().set_w(read_matrix(r, m, d));
    r.expect("tau");
    clf.novelty().tau = r.real();
    r.expect("t_star");
    clf.novelty().t_star = r.integer();
    r.expect("t");
    clf.novelty().t = r.integer();
    r.expect("balls");
    const std::size_t n_balls = r.count();
    for (std::size_t i = 0; i < n_balls; ++i) {
        r.expect("ball");
        Ball b;
        b.radius = r.real();
        b.radius_initial = r.real();
        b.errors = r.integer();
        b.center = read_vector(r, d);
        r.expect("counts");
        const std::size_t k = r.count();
        for (std::size_t c = 0; c < k; ++c) {
            const ClassId id = r.integer();
            const std::int64_t count = r.integer();
            b.class_counts[id] = count;
            b.total += count;
        }
        clf.restore_ball(std::move(b));
    }
    r.expect("end");
    return clf;
}

} // namespace owr
