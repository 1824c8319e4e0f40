#include "ptacheck/mdp_io.hpp"

#include "ptacheck/errors.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace ptacheck {

std::string sha256_hex(std::string_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 15];
    }
    return out;
}

std::string write_ps(const ProbSystem& ps) {
    std::string body;
    body.reserve(ps.num_transitions() * 16 + ps.num_states() * 32);
    body += "STATES " + std::to_string(ps.num_states()) + " INIT " + std::to_string(ps.initial()) + "\n";
    if (ps.decorated()) body += "FLAGS decorated\n";
    if (const auto& t = ps.stored_targets()) {
        body += "TARGETS " + std::to_string(t->size());
        for (auto s : *t) body += " " + std::to_string(s);
        body += "\n";
    }
    const bool named = ps.has_names();
    for (StateIndex s = 0; s < ps.num_states(); ++s) {
        body += "S " + std::to_string(s);
        if (named) body += " " + ps.name(s);
        body += "\n";
        for (const auto& c : ps.choices(s)) {
            body += "A " + ps.action_name(c.action) + "\n";
            for (const auto& t : ps.transitions(c)) {
                body += std::to_string(t.target);
                body += ' ';
                body += std::to_string(t.exact.num());
                body += '/';
                body += std::to_string(t.exact.den());
                body += '\n';
            }
        }
    }
    body += "SHA256 " + sha256_hex(body) + "\n";
    return body;
}

void write_ps(const ProbSystem& ps, std::ostream& out) { out << write_ps(ps); }

void write_ps_file(const ProbSystem& ps, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    write_ps(ps, out);
    if (!out) throw Error("write failed: " + path.string());
}

namespace {

struct LineReader {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line = 0;
    std::size_t line_start = 0;

    bool next(std::string_view& out) {
        if (pos >= text.size()) return false;
        line_start = pos;
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        out = text.substr(pos, nl - pos);
        if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
        pos = nl + 1;
        ++line;
        return true;
    }
};

std::uint64_t parse_u64(std::string_view s, std::size_t line, const char* what) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw ParseError(std::string("bad ") + what, line);
    return v;
}

std::vector<std::string_view> split(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

} // namespace

ProbSystem read_ps(std::string_view text) {
    LineReader r{text};
    std::string_view line;

    // Locate and verify the checksum first so later errors refer to intact input.
    std::size_t sha_pos = text.rfind("SHA256 ");
    if (sha_pos == std::string_view::npos || (sha_pos != 0 && text[sha_pos - 1] != '\n')) {
        throw ParseError("missing SHA256 trailer", 0);
    }
    std::string_view trailer = text.substr(sha_pos + 7);
    while (!trailer.empty() && (trailer.back() == '\n' || trailer.back() == '\r' || trailer.back() == ' ')) {
        trailer.remove_suffix(1);
    }
    std::string_view body = text.substr(0, sha_pos);
    if (sha256_hex(body) != trailer) throw ChecksumMismatch("SHA256 of body does not match trailer");
    r.text = body;

    if (!r.next(line)) throw ParseError("empty file", 1);
    auto head = split(line);
    if (head.size() != 4 || head[0] != "STATES" || head[2] != "INIT") throw ParseError("expected 'STATES n INIT i'", r.line);
    const std::uint64_t n = parse_u64(head[1], r.line, "state count");
    const std::uint64_t init = parse_u64(head[3], r.line, "initial state");
    if (n == 0 || init >= n) throw ParseError("initial state out of range", r.line);

    ProbSystemBuilder b;
    bool decorated = false;
    std::optional<std::vector<StateIndex>> targets;
    std::vector<std::string> names;
    std::int64_t current = -1;
    bool in_choice = false;
    Rational sum(0);
    std::size_t choice_line = 0;

    auto close_choice = [&]() {
        if (!in_choice) return;
        if (!sum.is_one()) throw ParseError("bad distribution (sums to " + sum.str() + ")", choice_line);
        in_choice = false;
    };

    while (r.next(line)) {
        if (line.empty()) continue;
        if (line.starts_with("FLAGS ")) {
            if (current >= 0) throw ParseError("FLAGS after first state", r.line);
            for (auto f : split(line.substr(6))) {
                if (f == "decorated") decorated = true;
                else throw ParseError("unknown flag " + std::string(f), r.line);
            }
        } else if (line.starts_with("TARGETS ")) {
            if (current >= 0) throw ParseError("TARGETS after first state", r.line);
            auto parts = split(line.substr(8));
            if (parts.empty()) throw ParseError("bad TARGETS line", r.line);
            std::uint64_t k = parse_u64(parts[0], r.line, "target count");
            if (parts.size() != k + 1) throw ParseError("TARGETS count mismatch", r.line);
            std::vector<StateIndex> t;
            for (std::size_t i = 1; i < parts.size(); ++i) {
                std::uint64_t v = parse_u64(parts[i], r.line, "target index");
                if (v >= n) throw ParseError("target index out of range", r.line);
                t.push_back(static_cast<StateIndex>(v));
            }
            targets = std::move(t);
        } else if (line.starts_with("S ")) {
            close_choice();
            auto rest = line.substr(2);
            auto sp = rest.find(' ');
            std::uint64_t idx = parse_u64(rest.substr(0, sp), r.line, "state index");
            if (static_cast<std::int64_t>(idx) != current + 1) throw ParseError("states must appear in order", r.line);
            if (idx >= n) throw ParseError("more states than declared", r.line);
            current = static_cast<std::int64_t>(idx);
            b.begin_state();
            if (sp != std::string_view::npos) {
                if (names.size() != idx) throw ParseError("state names must be given for all states or none", r.line);
                names.emplace_back(rest.substr(sp + 1));
            } else if (!names.empty()) {
                throw ParseError("state names must be given for all states or none", r.line);
            }
        } else if (line.starts_with("A ")) {
            if (current < 0) throw ParseError("action before any state", r.line);
            close_choice();
            b.begin_choice(b.action(line.substr(2)));
            in_choice = true;
            sum = Rational(0);
            choice_line = r.line;
        } else {
            if (!in_choice) throw ParseError("transition outside of an action", r.line);
            auto parts = split(line);
            if (parts.size() != 2) throw ParseError("expected '<target> <num>/<den>'", r.line);
            std::uint64_t t = parse_u64(parts[0], r.line, "transition target");
            if (t >= n) throw ParseError("transition target out of range", r.line);
            Rational p;
            try {
                p = Rational::parse(parts[1]);
            } catch (const std::exception&) {
                throw ParseError("bad probability " + std::string(parts[1]), r.line, parts[0].size() + 1);
            }
            if (p <= Rational(0) || Rational(1) < p) throw ParseError("bad distribution (probability out of (0,1])", r.line);
            sum += p;
            b.add(static_cast<StateIndex>(t), p);
        }
    }
    close_choice();
    if (static_cast<std::uint64_t>(current + 1) != n) throw ParseError("fewer states than declared", r.line);
    if (!names.empty()) b.set_names(std::move(names));
    ProbSystem ps = b.finish(static_cast<StateIndex>(init), n);
    ps.set_decorated(decorated);
    ps.set_stored_targets(std::move(targets));
    return ps;
}

ProbSystem read_ps(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_ps(buf.str());
}

ProbSystem read_ps_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return read_ps(in);
}

} // namespace ptacheck
