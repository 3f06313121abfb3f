#include "core/network_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cellmat {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_network(const Network& net, std::ostream& os) {
  os << "cellmat-net 1\n";
  os << "box " << format_double(net.box.edge_lengths()[0]) << ' '
     << format_double(net.box.edge_lengths()[1]) << ' '
     << format_double(net.box.edge_lengths()[2]) << '\n';
  os << "deform";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) os << ' ' << format_double(net.box.deformation()(r, c));
  os << '\n';
  os << "nodes " << net.nodes.size() << '\n';
  for (const NetworkNode& n : net.nodes)
    os << n.id << ' ' << format_double(n.position[0]) << ' ' << format_double(n.position[1])
       << ' ' << format_double(n.position[2]) << '\n';
  os << "fibers " << net.fibers.size() << '\n';
  for (const Fiber& f : net.fibers)
    os << f.id << ' ' << f.node_a << ' ' << f.node_b << ' ' << f.image_shift[0] << ' '
       << f.image_shift[1] << ' ' << f.image_shift[2] << ' ' << format_double(f.diameter) << ' '
       << format_double(f.modulus) << '\n';
}

void save_network(const Network& net, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_network(net, os);
  if (!os) throw IoError("write failed: " + path);
}

namespace {

std::istringstream next_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) throw IoError(std::string("network file truncated, expected ") + what);
  return std::istringstream(line);
}

void expect_tag(std::istringstream& ls, const char* tag) {
  std::string t;
  ls >> t;
  if (t != tag) throw IoError(std::string("network file: expected '") + tag + "', got '" + t + "'");
}

}  // namespace

Network read_network(std::istream& is, bool strict_length_bound) {
  Network net;
  {
    auto ls = next_line(is, "header");
    expect_tag(ls, "cellmat-net");
    int version = 0;
    ls >> version;
    if (version != 1) throw IoError("unsupported network file version");
  }
  {
    auto ls = next_line(is, "box");
    expect_tag(ls, "box");
    Vec3 L;
    ls >> L[0] >> L[1] >> L[2];
    if (!ls) throw IoError("network file: malformed box line");
    net.box.set_edge_lengths(L);
  }
  {
    auto ls = next_line(is, "deform");
    expect_tag(ls, "deform");
    Mat3 F;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) ls >> F(r, c);
    if (!ls) throw IoError("network file: malformed deform line");
    net.box.set_deformation(F);
  }
  {
    auto ls = next_line(is, "nodes");
    expect_tag(ls, "nodes");
    size_t n = 0;
    ls >> n;
    if (!ls) throw IoError("network file: malformed nodes line");
    net.nodes.resize(n);
    for (size_t i = 0; i < n; ++i) {
      auto nl = next_line(is, "node");
      NetworkNode& nd = net.nodes[i];
      nl >> nd.id >> nd.position[0] >> nd.position[1] >> nd.position[2];
      if (!nl) throw IoError("network file: malformed node line");
    }
  }
  {
    auto ls = next_line(is, "fibers");
    expect_tag(ls, "fibers");
    size_t n = 0;
    ls >> n;
    if (!ls) throw IoError("network file: malformed fibers line");
    net.fibers.resize(n);
    for (size_t i = 0; i < n; ++i) {
      auto fl = next_line(is, "fiber");
      Fiber& f = net.fibers[i];
      fl >> f.id >> f.node_a >> f.node_b >> f.image_shift[0] >> f.image_shift[1] >>
          f.image_shift[2] >> f.diameter >> f.modulus;
      if (!fl) throw IoError("network file: malformed fiber line");
    }
  }
  net.validate(strict_length_bound);
  return net;
}

Network load_network(const std::string& path, bool strict_length_bound) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open network file: " + path);
  return read_network(is, strict_length_bound);
}

}  // namespace cellmat
