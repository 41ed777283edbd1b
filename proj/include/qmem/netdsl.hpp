#pragma once

#include "qmem/slh.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmem {

/// 1-based position of a token in .qnet source.
struct SourcePos {
    int line = 1;
    int column = 1;
};

/// Parse or compile diagnostic; what() reads "line L, column C: message".
class NetError : public std::runtime_error {
  public:
    NetError(SourcePos pos, const std::string& message);
    SourcePos pos() const { return pos_; }

  private:
    SourcePos pos_;
};

/// Arithmetic over numeric literals and parameter names.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;
struct Expr {
    enum class Kind { number, param, add, sub, mul, div, neg, sqrt };
    Kind kind = Kind::number;
    double value = 0.0;  // number
    std::string name;    // param
    ExprPtr lhs, rhs;    // operands; unary ops use lhs only
    SourcePos pos;
};

struct ParamDecl {
    std::string name;
    ExprPtr value;
    SourcePos pos;
};

struct CavityDecl {
    std::string name;
    std::vector<ExprPtr> couplings;  // mirror decay rates, one per port
    SourcePos pos;
};

/// `component.inJ` or `component.outJ`, J written 1-based.
struct PortRef {
    std::string component;
    bool is_input = false;
    int port = 0;
    SourcePos pos;
};

struct ConnectDecl {
    PortRef src;  // always an output
    PortRef dst;  // always an input
    SourcePos pos;
};

struct ExternalDecl {
    bool is_input = false;
    PortRef port;
    SourcePos pos;
};

/// Parsed .qnet file.  Statement categories keep declaration order; parameters
/// are evaluated first and may only reference parameters declared above them.
struct NetworkDesc {
    std::vector<ParamDecl> params;
    std::vector<CavityDecl> cavities;
    std::vector<ConnectDecl> connections;
    std::vector<ExternalDecl> externals;

    bool empty() const {
        return params.empty() && cavities.empty() && connections.empty() &&
               externals.empty();
    }
};

/// Parse .qnet source.  Throws NetError with the offending position.
NetworkDesc parse(const std::string& source);

/// Read and parse a .qnet file; throws std::runtime_error if unreadable.
NetworkDesc parse_file(const std::string& path);

/// Canonical pretty-print: params, cavities, connections, externals, one
/// statement per line.  parse(print(parse(s))) equals parse(s).
std::string print(const NetworkDesc& desc);

/// Instantiate cavities, assemble the parallel sum in declaration order and
/// eliminate the connected channels.  External declarations, when present for
/// a direction, must cover exactly the unconnected ports of that direction
/// and fix their order.  Throws NetError (algebraic-loop failures carry the
/// position of the first connection).
SlhModel compile(const NetworkDesc& desc);

}  // namespace qmem
