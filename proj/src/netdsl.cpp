#include "qmem/netdsl.hpp"

#include "qmem/memory.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

namespace qmem {

namespace {

std::string format_pos(SourcePos pos, const std::string& message) {
    std::ostringstream os;
    os << "line " << pos.line << ", column " << pos.column << ": " << message;
    return os.str();
}

}  // namespace

NetError::NetError(SourcePos pos, const std::string& message)
    : std::runtime_error(format_pos(pos, message)), pos_(pos) {}

namespace {

struct Token {
    enum class Kind {
        ident,
        number,
        lbracket,
        rbracket,
        lparen,
        rparen,
        comma,
        dot,
        arrow,
        equals,
        plus,
        minus,
        star,
        slash,
        end,
    };
    Kind kind = Kind::end;
    std::string text;
    double value = 0.0;
    SourcePos pos;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) {}

    Token next() {
        skip();
        Token tok;
        tok.pos = {line_, col_};
        if (i_ >= src_.size()) return tok;

        const char c = src_[i_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i_;
            while (j < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
                ++j;
            tok.kind = Token::Kind::ident;
            tok.text = src_.substr(i_, j - i_);
            advance(j - i_);
            return tok;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[i_ + 1])))) {
            double v = 0.0;
            const char* first = src_.data() + i_;
            const char* last = src_.data() + src_.size();
            const auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc())
                throw NetError(tok.pos, "malformed number");
            tok.kind = Token::Kind::number;
            tok.value = v;
            tok.text = std::string(first, res.ptr);
            advance(static_cast<size_t>(res.ptr - first));
            return tok;
        }
        if (c == '-' && i_ + 1 < src_.size() && src_[i_ + 1] == '>') {
            tok.kind = Token::Kind::arrow;
            tok.text = "->";
            advance(2);
            return tok;
        }
        const auto simple = [&](Token::Kind k) {
            tok.kind = k;
            tok.text = std::string(1, c);
            advance(1);
            return tok;
        };
        switch (c) {
            case '[': return simple(Token::Kind::lbracket);
            case ']': return simple(Token::Kind::rbracket);
            case '(': return simple(Token::Kind::lparen);
            case ')': return simple(Token::Kind::rparen);
            case ',': return simple(Token::Kind::comma);
            case '.': return simple(Token::Kind::dot);
            case '=': return simple(Token::Kind::equals);
            case '+': return simple(Token::Kind::plus);
            case '-': return simple(Token::Kind::minus);
            case '*': return simple(Token::Kind::star);
            case '/': return simple(Token::Kind::slash);
            default:
                throw NetError(tok.pos,
                               std::string("unexpected character '") + c + "'");
        }
    }

  private:
    void skip() {
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (c == '#') {
                while (i_ < src_.size() && src_[i_] != '\n') advance(1);
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance(1);
            } else {
                break;
            }
        }
    }

    void advance(size_t count) {
        for (size_t k = 0; k < count; ++k) {
            if (src_[i_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++i_;
        }
    }

    const std::string& src_;
    size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
  public:
    explicit Parser(const std::string& src) : lex_(src) { bump(); }

    NetworkDesc file() {
        NetworkDesc desc;
        while (cur_.kind != Token::Kind::end) {
            if (cur_.kind != Token::Kind::ident)
                throw NetError(cur_.pos, "expected a statement keyword");
            if (cur_.text == "param")
                desc.params.push_back(param());
            else if (cur_.text == "cavity")
                desc.cavities.push_back(cavity());
            else if (cur_.text == "connect")
                desc.connections.push_back(connect());
            else if (cur_.text == "input" || cur_.text == "output")
                desc.externals.push_back(external());
            else
                throw NetError(cur_.pos, "unknown statement '" + cur_.text + "'");
        }
        return desc;
    }

  private:
    void bump() { cur_ = lex_.next(); }

    Token expect(Token::Kind kind, const std::string& what) {
        if (cur_.kind != kind)
            throw NetError(cur_.pos, "expected " + what);
        Token tok = cur_;
        bump();
        return tok;
    }

    ParamDecl param() {
        ParamDecl decl;
        decl.pos = cur_.pos;
        bump();  // param
        decl.name = expect(Token::Kind::ident, "a parameter name").text;
        expect(Token::Kind::equals, "'='");
        decl.value = expr();
        return decl;
    }

    CavityDecl cavity() {
        CavityDecl decl;
        decl.pos = cur_.pos;
        bump();  // cavity
        decl.name = expect(Token::Kind::ident, "a component name").text;
        const Token kw = expect(Token::Kind::ident, "'couplings'");
        if (kw.text != "couplings")
            throw NetError(kw.pos, "expected 'couplings'");
        expect(Token::Kind::lbracket, "'['");
        decl.couplings.push_back(expr());
        while (cur_.kind == Token::Kind::comma) {
            bump();
            decl.couplings.push_back(expr());
        }
        expect(Token::Kind::rbracket, "']'");
        return decl;
    }

    ConnectDecl connect() {
        ConnectDecl decl;
        decl.pos = cur_.pos;
        bump();  // connect
        decl.src = port_ref();
        if (decl.src.is_input)
            throw NetError(decl.src.pos, "source is not an output port");
        expect(Token::Kind::arrow, "'->'");
        decl.dst = port_ref();
        if (!decl.dst.is_input)
            throw NetError(decl.dst.pos, "target is not an input port");
        return decl;
    }

    ExternalDecl external() {
        ExternalDecl decl;
        decl.pos = cur_.pos;
        decl.is_input = cur_.text == "input";
        bump();  // input | output
        decl.port = port_ref();
        if (decl.port.is_input != decl.is_input)
            throw NetError(decl.port.pos,
                           decl.is_input ? "external input must name an inJ port"
                                         : "external output must name an outJ port");
        return decl;
    }

    PortRef port_ref() {
        PortRef ref;
        const Token comp = expect(Token::Kind::ident, "a component name");
        ref.component = comp.text;
        expect(Token::Kind::dot, "'.'");
        const Token port = expect(Token::Kind::ident, "a port name (inJ or outJ)");
        ref.pos = port.pos;
        std::string digits;
        if (port.text.rfind("in", 0) == 0) {
            ref.is_input = true;
            digits = port.text.substr(2);
        } else if (port.text.rfind("out", 0) == 0) {
            ref.is_input = false;
            digits = port.text.substr(3);
        } else {
            throw NetError(port.pos,
                           "malformed port name '" + port.text + "' (expected inJ or outJ)");
        }
        if (digits.empty() ||
            !std::all_of(digits.begin(), digits.end(),
                         [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            throw NetError(port.pos,
                           "malformed port name '" + port.text + "' (expected inJ or outJ)");
        ref.port = std::stoi(digits);
        if (ref.port < 1)
            throw NetError(port.pos, "port index must be at least 1");
        return ref;
    }

    // expr := term { (+|-) term } ; term := factor { (*|/) factor }
    ExprPtr expr() {
        ExprPtr lhs = term();
        while (cur_.kind == Token::Kind::plus || cur_.kind == Token::Kind::minus) {
            auto node = std::make_shared<Expr>();
            node->kind = cur_.kind == Token::Kind::plus ? Expr::Kind::add : Expr::Kind::sub;
            node->pos = cur_.pos;
            bump();
            node->lhs = lhs;
            node->rhs = term();
            lhs = node;
        }
        return lhs;
    }

    ExprPtr term() {
        ExprPtr lhs = factor();
        while (cur_.kind == Token::Kind::star || cur_.kind == Token::Kind::slash) {
            auto node = std::make_shared<Expr>();
            node->kind = cur_.kind == Token::Kind::star ? Expr::Kind::mul : Expr::Kind::div;
            node->pos = cur_.pos;
            bump();
            node->lhs = lhs;
            node->rhs = factor();
            lhs = node;
        }
        return lhs;
    }

    ExprPtr factor() {
        if (cur_.kind == Token::Kind::minus) {
            auto node = std::make_shared<Expr>();
            node->kind = Expr::Kind::neg;
            node->pos = cur_.pos;
            bump();
            node->lhs = factor();
            return node;
        }
        if (cur_.kind == Token::Kind::number) {
            auto node = std::make_shared<Expr>();
            node->kind = Expr::Kind::number;
            node->value = cur_.value;
            node->pos = cur_.pos;
            bump();
            return node;
        }
        if (cur_.kind == Token::Kind::lparen) {
            bump();
            ExprPtr inner = expr();
            expect(Token::Kind::rparen, "')'");
            return inner;
        }
        if (cur_.kind == Token::Kind::ident) {
            const Token id = cur_;
            bump();
            if (cur_.kind == Token::Kind::lparen) {
                if (id.text != "sqrt")
                    throw NetError(id.pos, "unknown function '" + id.text + "'");
                bump();
                auto node = std::make_shared<Expr>();
                node->kind = Expr::Kind::sqrt;
                node->pos = id.pos;
                node->lhs = expr();
                expect(Token::Kind::rparen, "')'");
                return node;
            }
            auto node = std::make_shared<Expr>();
            node->kind = Expr::Kind::param;
            node->name = id.text;
            node->pos = id.pos;
            return node;
        }
        throw NetError(cur_.pos, "expected an expression");
    }

    Lexer lex_;
    Token cur_;
};

double eval(const ExprPtr& e, const std::map<std::string, double>& params) {
    switch (e->kind) {
        case Expr::Kind::number: return e->value;
        case Expr::Kind::param: {
            const auto it = params.find(e->name);
            if (it == params.end())
                throw NetError(e->pos, "unknown identifier '" + e->name + "'");
            return it->second;
        }
        case Expr::Kind::add: return eval(e->lhs, params) + eval(e->rhs, params);
        case Expr::Kind::sub: return eval(e->lhs, params) - eval(e->rhs, params);
        case Expr::Kind::mul: return eval(e->lhs, params) * eval(e->rhs, params);
        case Expr::Kind::div: return eval(e->lhs, params) / eval(e->rhs, params);
        case Expr::Kind::neg: return -eval(e->lhs, params);
        case Expr::Kind::sqrt: {
            const double v = eval(e->lhs, params);
            if (v < 0.0) throw NetError(e->pos, "sqrt of a negative value");
            return std::sqrt(v);
        }
    }
    throw NetError(e->pos, "unreachable expression kind");
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Precedence: +,- bind at 1; *,/ at 2; unary at 3; atoms at 4.  A child is
// parenthesized when it binds looser than its context requires.
std::string print_expr(const ExprPtr& e, int required) {
    int prec = 4;
    std::string body;
    switch (e->kind) {
        case Expr::Kind::number: body = format_number(e->value); break;
        case Expr::Kind::param: body = e->name; break;
        case Expr::Kind::sqrt: body = "sqrt(" + print_expr(e->lhs, 0) + ")"; break;
        case Expr::Kind::neg:
            prec = 3;
            body = "-" + print_expr(e->lhs, 3);
            break;
        case Expr::Kind::add:
        case Expr::Kind::sub:
            prec = 1;
            body = print_expr(e->lhs, 1) + (e->kind == Expr::Kind::add ? " + " : " - ") +
                   print_expr(e->rhs, 2);
            break;
        case Expr::Kind::mul:
        case Expr::Kind::div:
            prec = 2;
            body = print_expr(e->lhs, 2) + (e->kind == Expr::Kind::mul ? " * " : " / ") +
                   print_expr(e->rhs, 3);
            break;
    }
    if (prec < required) return "(" + body + ")";
    return body;
}

std::string print_port(const PortRef& ref) {
    return ref.component + "." + (ref.is_input ? "in" : "out") + std::to_string(ref.port);
}

}  // namespace

NetworkDesc parse(const std::string& source) { return Parser(source).file(); }

NetworkDesc parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string print(const NetworkDesc& desc) {
    std::ostringstream os;
    for (const auto& p : desc.params)
        os << "param " << p.name << " = " << print_expr(p.value, 0) << "\n";
    for (const auto& c : desc.cavities) {
        os << "cavity " << c.name << " couplings [";
        for (size_t j = 0; j < c.couplings.size(); ++j)
            os << (j ? ", " : "") << print_expr(c.couplings[j], 0);
        os << "]\n";
    }
    for (const auto& c : desc.connections)
        os << "connect " << print_port(c.src) << " -> " << print_port(c.dst) << "\n";
    for (const auto& e : desc.externals)
        os << (e.is_input ? "input " : "output ") << print_port(e.port) << "\n";
    return os.str();
}

namespace {

struct Placement {
    Eigen::Index base = 0;   // first port index in the parallel sum
    Eigen::Index arity = 0;  // number of ports
};

Eigen::Index resolve(const std::map<std::string, Placement>& placements, const PortRef& ref) {
    const auto it = placements.find(ref.component);
    if (it == placements.end())
        throw NetError(ref.pos, "unknown component '" + ref.component + "'");
    if (ref.port > it->second.arity) {
        std::ostringstream os;
        os << "component '" << ref.component << "' has " << it->second.arity
           << " ports; port index " << ref.port << " is out of range";
        throw NetError(ref.pos, os.str());
    }
    return it->second.base + ref.port - 1;
}

// Reorder one side's ports of a reduced model to the declared external order.
void apply_port_order(SlhModel& model, const std::vector<Eigen::Index>& order, bool inputs) {
    const Eigen::Index m = model.n_ports();
    Mat s(m, m);
    Mat k = model.K;
    std::vector<std::string> labels(static_cast<size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index from = order[static_cast<size_t>(j)];
        if (inputs) {
            s.col(j) = model.S.col(from);
            labels[static_cast<size_t>(j)] = model.input_labels[static_cast<size_t>(from)];
        } else {
            s.row(j) = model.S.row(from);
            k.row(j) = model.K.row(from);
            labels[static_cast<size_t>(j)] = model.output_labels[static_cast<size_t>(from)];
        }
    }
    model.S = s;
    if (inputs)
        model.input_labels = labels;
    else {
        model.K = k;
        model.output_labels = labels;
    }
}

}  // namespace

SlhModel compile(const NetworkDesc& desc) {
    std::map<std::string, double> params;
    for (const auto& p : desc.params) {
        if (params.count(p.name))
            throw NetError(p.pos, "duplicate parameter '" + p.name + "'");
        params[p.name] = eval(p.value, params);
    }

    std::map<std::string, Placement> placements;
    std::vector<SlhModel> models;
    Eigen::Index base = 0;
    for (const auto& c : desc.cavities) {
        if (placements.count(c.name))
            throw NetError(c.pos, "duplicate cavity '" + c.name + "'");
        std::vector<double> rates;
        for (const auto& expr : c.couplings) {
            const double v = eval(expr, params);
            if (!std::isfinite(v) || v <= 0.0)
                throw NetError(expr->pos, "coupling must be a positive finite number");
            rates.push_back(v);
        }
        placements[c.name] = {base, static_cast<Eigen::Index>(rates.size())};
        base += static_cast<Eigen::Index>(rates.size());
        models.push_back(make_cavity(rates, c.name));
    }

    if (models.empty()) {
        if (!desc.connections.empty())
            throw NetError(desc.connections.front().pos, "connection without any components");
        if (!desc.externals.empty())
            throw NetError(desc.externals.front().pos, "external port without any components");
        return SlhModel::passthrough(0, "net");
    }

    AdjacencyMap adj;
    std::set<Eigen::Index> used_src, used_dst;
    for (const auto& conn : desc.connections) {
        const Eigen::Index src = resolve(placements, conn.src);
        const Eigen::Index dst = resolve(placements, conn.dst);
        if (!used_src.insert(src).second)
            throw NetError(conn.src.pos,
                           "output port '" + print_port(conn.src) + "' is already connected");
        if (!used_dst.insert(dst).second)
            throw NetError(conn.dst.pos,
                           "input port '" + print_port(conn.dst) + "' is already connected");
        adj.connections.emplace_back(src, dst);
    }

    SlhModel model;
    try {
        model = feedback_reduce(parallel_sum(models), adj);
    } catch (const std::runtime_error& e) {
        if (desc.connections.empty()) throw;
        throw NetError(desc.connections.front().pos, e.what());
    }

    // Positions of the surviving external ports, in pre-reduction index order.
    std::vector<Eigen::Index> ext_in, ext_out;
    for (Eigen::Index j = 0; j < base; ++j) {
        if (!used_dst.count(j)) ext_in.push_back(j);
        if (!used_src.count(j)) ext_out.push_back(j);
    }

    for (const bool inputs : {true, false}) {
        std::vector<const ExternalDecl*> decls;
        for (const auto& e : desc.externals)
            if (e.is_input == inputs) decls.push_back(&e);
        if (decls.empty()) continue;

        const auto& ext = inputs ? ext_in : ext_out;
        std::vector<Eigen::Index> order;
        std::set<Eigen::Index> seen;
        for (const ExternalDecl* e : decls) {
            const Eigen::Index global = resolve(placements, e->port);
            const auto it = std::find(ext.begin(), ext.end(), global);
            if (it == ext.end())
                throw NetError(e->port.pos,
                               "external port '" + print_port(e->port) +
                                   "' is connected internally");
            if (!seen.insert(global).second)
                throw NetError(e->port.pos,
                               "duplicate external declaration '" + print_port(e->port) + "'");
            order.push_back(it - ext.begin());
        }
        if (order.size() != ext.size())
            throw NetError(decls.front()->port.pos,
                           std::string("external ") + (inputs ? "input" : "output") +
                               " declarations do not cover every unconnected port");
        apply_port_order(model, order, inputs);
    }
    return model;
}

}  // namespace qmem
