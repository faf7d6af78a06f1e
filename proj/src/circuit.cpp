#include "dqap/circuit.hpp"

#include <array>
#include <cctype>
#include <numbers>

#include "dqap/error.hpp"
#include "dqap/format.hpp"

namespace dqap {

namespace {

constexpr std::array<std::pair<GateKind, const char*>, 9> kGateNames{{
    {GateKind::X, "X"},
    {GateKind::H, "H"},
    {GateKind::RX, "RX"},
    {GateKind::RZ, "RZ"},
    {GateKind::S_DAG, "S_DAG"},
    {GateKind::CNOT, "CNOT"},
    {GateKind::CPHASE, "CPHASE"},
    {GateKind::ZZPHASE, "ZZPHASE"},
    {GateKind::ISWAP, "ISWAP"},
}};

constexpr double kPi = std::numbers::pi;
constexpr std::string_view kTextMagic = "DQAPIR 1 qubits=";

}  // namespace

const char* to_string(GateKind k) {
  for (const auto& [kind, name] : kGateNames)
    if (kind == k) return name;
  throw InvalidArgument("unknown gate kind");
}

GateKind gate_kind_from_string(std::string_view text) {
  for (const auto& [kind, name] : kGateNames)
    if (text == name) return kind;
  throw InvalidArgument("unknown gate kind '" + std::string(text) + "'");
}

int arity(GateKind k) {
  switch (k) {
    case GateKind::X:
    case GateKind::H:
    case GateKind::RX:
    case GateKind::RZ:
    case GateKind::S_DAG:
      return 1;
    case GateKind::CNOT:
    case GateKind::CPHASE:
    case GateKind::ZZPHASE:
    case GateKind::ISWAP:
      return 2;
  }
  throw InvalidArgument("unknown gate kind");
}

bool is_parameterized(GateKind k) {
  switch (k) {
    case GateKind::RX:
    case GateKind::RZ:
    case GateKind::CPHASE:
    case GateKind::ZZPHASE:
    case GateKind::ISWAP:
      return true;
    default:
      return false;
  }
}

CircuitIR::CircuitIR(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 0) throw InvalidArgument("negative qubit count");
}

void CircuitIR::add(GateKind kind, int q0, int q1, std::optional<double> angle) {
  add(Gate{kind, q0, q1, angle});
}

void CircuitIR::add(const Gate& g) {
  const int n = arity(g.kind);
  auto in_range = [&](int q) { return q >= 0 && q < n_qubits_; };
  if (!in_range(g.q0)) throw InvalidArgument("qubit index out of range");
  if (n == 2) {
    if (!in_range(g.q1)) throw InvalidArgument("qubit index out of range");
    if (g.q0 == g.q1) throw InvalidArgument("two-qubit gate on a single qubit");
  } else if (g.q1 != -1) {
    throw InvalidArgument(std::string(to_string(g.kind)) + " takes one qubit");
  }
  if (is_parameterized(g.kind) != g.angle.has_value())
    throw InvalidArgument(std::string(to_string(g.kind)) +
                          (g.angle ? " takes no angle" : " requires an angle"));
  if (g.angle && !std::isfinite(*g.angle)) throw InvalidArgument("non-finite gate angle");
  gates_.push_back(g);
}

void CircuitIR::append(const CircuitIR& other) {
  for (const Gate& g : other.gates_) add(g);
}

void CircuitIR::validate() const {
  CircuitIR copy(n_qubits_);
  for (const Gate& g : gates_) copy.add(g);
}

const char* to_string(MeasurementBasis b) { return b == MeasurementBasis::X ? "X" : "Y"; }

MeasurementBasis measurement_basis_from_string(std::string_view text) {
  if (text == "X" || text == "x") return MeasurementBasis::X;
  if (text == "Y" || text == "y") return MeasurementBasis::Y;
  throw InvalidArgument("basis must be X or Y");
}

double qubit_coupling(const Bond& bond, const SshParams& p) {
  const bool closes_ring = bond.a == 0 && bond.b == p.L - 1 && p.L > 2;
  if (!closes_ring) return bond.amplitude;
  const double string_sign = (p.particles() - 1) % 2 == 0 ? 1.0 : -1.0;
  return bond.amplitude * string_sign;
}

double bond_rotation_angle(const Bond& bond, const SshParams& p, double theta) {
  // exp(-i theta (-t)(XX+YY)/2) = exp(-i phi (XX+YY)/2) with phi = -theta t.
  return -theta * qubit_coupling(bond, p);
}

CircuitIR build_state_circuit(const SshParams& p, const ParamSchedule& schedule, int offset,
                              int total_qubits) {
  p.validate();
  schedule.validate();
  const SingleParticleHamiltonians hams = build_hamiltonians(p);
  CircuitIR c(total_qubits < 0 ? offset + p.L : total_qubits);
  for (const Bond& b : hams.v_bonds) {
    c.add(GateKind::H, offset + b.a);
    c.add(GateKind::X, offset + b.b);
    c.add(GateKind::CNOT, offset + b.a, offset + b.b);
  }
  auto layer = [&](const std::vector<Bond>& bonds, double theta) {
    for (const Bond& b : bonds)
      c.add(GateKind::ISWAP, offset + b.a, offset + b.b, 2.0 * bond_rotation_angle(b, p, theta));
  };
  for (const LayerAngles& m : schedule.layers) {
    layer(hams.w_bonds, m.theta2);
    layer(hams.v_bonds, m.theta1);
  }
  return c;
}

CircuitIR build_measurement_circuit(const SshParams& p, const ParamSchedule& schedule,
                                    MeasurementBasis basis) {
  CircuitIR c(p.L + 1);
  c.add(GateKind::H, 0);
  c.append(build_state_circuit(p, schedule, 1, p.L + 1));
  // The l = L factor is exp(2 pi i) = 1.
  for (int l = 1; l < p.L; ++l) c.add(GateKind::CPHASE, 0, l, 2.0 * kPi * l / p.L);
  if (basis == MeasurementBasis::Y) c.add(GateKind::S_DAG, 0);
  c.add(GateKind::H, 0);
  return c;
}

std::vector<Gate> xx_plus_yy_decomposition(int a, int b, double phi) {
  return {
      {GateKind::RX, a, -1, -kPi / 2}, {GateKind::RX, b, -1, -kPi / 2},
      {GateKind::CNOT, a, b, std::nullopt},
      {GateKind::RX, a, -1, phi},      {GateKind::RZ, b, -1, phi},
      {GateKind::CNOT, a, b, std::nullopt},
      {GateKind::RX, a, -1, kPi / 2},  {GateKind::RX, b, -1, kPi / 2},
  };
}

CircuitIR lower_to_native(const CircuitIR& c) {
  c.validate();
  CircuitIR out(c.n_qubits());
  for (const Gate& g : c.gates()) {
    const int a = g.q0;
    const int b = g.q1;
    switch (g.kind) {
      case GateKind::CNOT:
        // CZ = RZ(pi/2) x RZ(pi/2) . exp(i pi/4 ZZ) up to phase.
        out.add(GateKind::H, b);
        out.add(GateKind::RZ, a, -1, kPi / 2);
        out.add(GateKind::RZ, b, -1, kPi / 2);
        out.add(GateKind::ZZPHASE, a, b, -kPi / 2);
        out.add(GateKind::H, b);
        break;
      case GateKind::CPHASE:
        out.add(GateKind::RZ, a, -1, *g.angle / 2);
        out.add(GateKind::RZ, b, -1, *g.angle / 2);
        out.add(GateKind::ZZPHASE, a, b, -*g.angle / 2);
        break;
      case GateKind::ISWAP:
        // exp(-i t XX/4) then exp(-i t YY/4); they commute.
        out.add(GateKind::H, a);
        out.add(GateKind::H, b);
        out.add(GateKind::ZZPHASE, a, b, *g.angle / 2);
        out.add(GateKind::H, a);
        out.add(GateKind::H, b);
        out.add(GateKind::RX, a, -1, -kPi / 2);
        out.add(GateKind::RX, b, -1, -kPi / 2);
        out.add(GateKind::ZZPHASE, a, b, *g.angle / 2);
        out.add(GateKind::RX, a, -1, kPi / 2);
        out.add(GateKind::RX, b, -1, kPi / 2);
        break;
      default:
        out.add(g);
    }
  }
  return out;
}

int count_native_gates(const CircuitIR& lowered) {
  int n = 0;
  for (const Gate& g : lowered.gates()) {
    if (g.kind == GateKind::ZZPHASE)
      ++n;
    else if (arity(g.kind) == 2)
      throw InvalidArgument(std::string("circuit is not lowered: contains ") + to_string(g.kind));
  }
  return n;
}

int predicted_counts(int L, int M, bool with_hadamard_test) {
  if (L <= 0 || L % 2 != 0) throw InvalidArgument("L must be positive and even");
  if (M < 0) throw InvalidArgument("M must be non-negative");
  return with_hadamard_test ? 2 * M * L + 3 * L / 2 - 1 : 2 * M * L + L / 2;
}

std::string emit_text(const CircuitIR& c) {
  c.validate();
  std::string out(kTextMagic);
  out += std::to_string(c.n_qubits()) + "\n";
  for (const Gate& g : c.gates()) {
    out += to_string(g.kind);
    out += " q[" + std::to_string(g.q0) + "]";
    if (g.q1 >= 0) out += ",q[" + std::to_string(g.q1) + "]";
    if (g.angle) out += "," + format_real(*g.angle);
    out += "\n";
  }
  return out;
}

namespace {

// Cursor over one line of the text format.
class LineScanner {
 public:
  LineScanner(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, line_no_, pos_ + 1);
  }
  bool done() const { return pos_ >= line_.size(); }
  bool peek(char ch) const { return !done() && line_[pos_] == ch; }

  void expect(char ch) {
    if (!peek(ch)) fail(std::string("expected '") + ch + "'");
    ++pos_;
  }
  std::string_view take_until(std::string_view stops) {
    const std::size_t start = pos_;
    while (!done() && stops.find(line_[pos_]) == std::string_view::npos) ++pos_;
    return line_.substr(start, pos_ - start);
  }
  int qubit(int n_qubits) {
    expect('q');
    expect('[');
    const std::size_t start = pos_;
    const std::string_view digits = take_until("]");
    long long q = -1;
    try {
      q = parse_integer(digits);
    } catch (const InvalidArgument&) {
      pos_ = start;
      fail("invalid qubit index");
    }
    if (q < 0 || q >= n_qubits) {
      pos_ = start;
      fail("qubit index out of range");
    }
    return static_cast<int>(q);
  }
  double real() {
    const std::size_t start = pos_;
    const std::string_view token = take_until(",");
    try {
      return parse_real(token);
    } catch (const InvalidArgument&) {
      pos_ = start;
      fail("invalid angle");
    }
  }
  std::size_t column() const { return pos_ + 1; }

 private:
  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

}  // namespace

CircuitIR parse_text(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t begin = 0;
  std::optional<CircuitIR> circuit;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (!line.empty() && line.front() == '#') continue;

    if (!circuit) {
      if (line.substr(0, kTextMagic.size()) != kTextMagic)
        throw ParseError("missing 'DQAPIR 1 qubits=' header", line_no, 1);
      try {
        circuit.emplace(static_cast<int>(parse_integer(line.substr(kTextMagic.size()))));
      } catch (const InvalidArgument&) {
        throw ParseError("invalid qubit count", line_no, kTextMagic.size() + 1);
      }
      continue;
    }
    if (line.empty()) throw ParseError("empty line", line_no, 1);

    LineScanner scan(line, line_no);
    GateKind kind;
    try {
      kind = gate_kind_from_string(scan.take_until(" "));
    } catch (const InvalidArgument&) {
      throw ParseError("unknown gate kind", line_no, 1);
    }
    scan.expect(' ');
    Gate g{kind, scan.qubit(circuit->n_qubits()), -1, std::nullopt};
    scan.expect(']');
    if (arity(kind) == 2) {
      scan.expect(',');
      g.q1 = scan.qubit(circuit->n_qubits());
      scan.expect(']');
    }
    if (is_parameterized(kind)) {
      scan.expect(',');
      g.angle = scan.real();
    }
    if (!scan.done()) scan.fail("unexpected trailing characters");
    try {
      circuit->add(g);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no, 1);
    }
  }
  if (!circuit) throw ParseError("empty input", 1, 1);
  return *circuit;
}

std::string emit_json(const CircuitIR& c) {
  c.validate();
  nlohmann::ordered_json gates = nlohmann::ordered_json::array();
  for (const Gate& g : c.gates()) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(g.kind);
    j["qubits"] = g.q1 >= 0 ? nlohmann::ordered_json{g.q0, g.q1} : nlohmann::ordered_json{g.q0};
    if (g.angle) j["angle"] = *g.angle;
    gates.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["format"] = "dqap-circuit";
  doc["version"] = 1;
  doc["n_qubits"] = c.n_qubits();
  doc["gates"] = std::move(gates);
  return doc.dump(1) + "\n";
}

CircuitIR parse_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // byte offset -> line/column
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(e.what(), line, col);
  }
  try {
    if (doc.at("format") != "dqap-circuit" || doc.at("version") != 1)
      throw ParseError("unsupported circuit format", 1, 1);
    CircuitIR c(doc.at("n_qubits").get<int>());
    for (const auto& jg : doc.at("gates")) {
      Gate g{gate_kind_from_string(jg.at("kind").get<std::string>()), 0, -1, std::nullopt};
      const auto& qs = jg.at("qubits");
      if (qs.size() != static_cast<std::size_t>(arity(g.kind)))
        throw InvalidArgument("wrong number of qubits for " + std::string(to_string(g.kind)));
      g.q0 = qs.at(0).get<int>();
      if (qs.size() == 2) g.q1 = qs.at(1).get<int>();
      if (jg.contains("angle")) g.angle = jg.at("angle").get<double>();
      c.add(g);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed circuit document: ") + e.what(), 1, 1);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), 1, 1);
  }
}

}  // namespace dqap
