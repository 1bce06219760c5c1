#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fjres/error.hpp"
#include "fjres/graphs.hpp"

namespace fjres {

void write_edge_list(const Network& net, std::ostream& out) {
  nlohmann::json header;
  header["n"] = net.size();
  header["kind"] = to_string(net.kind());
  header["seed"] = net.seed();
  header["misbehaving"] = net.misbehaving_labels();
  out << "# " << header.dump() << '\n';
  // Edges in external labels, sorted for stable output.
  std::vector<std::pair<int, int>> labelled;
  for (Edge e : net.edges()) {
    int a = net.label(e.u);
    int b = net.label(e.v);
    if (a > b) std::swap(a, b);
    labelled.emplace_back(a, b);
  }
  std::sort(labelled.begin(), labelled.end());
  for (auto [a, b] : labelled) out << a << ' ' << b << '\n';
}

Network read_edge_list(std::istream& in) {
  std::string line;
  nlohmann::json header;
  bool have_header = false;
  std::vector<std::pair<int, int>> edges;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (have_header) continue;
      try {
        header = nlohmann::json::parse(line.substr(1));
      } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("edge list header is not valid JSON: " + std::string(e.what()));
      }
      have_header = true;
      continue;
    }
    std::istringstream ls(line);
    int a = 0;
    int b = 0;
    if (!(ls >> a >> b)) throw InvalidArgument("edge list line " + std::to_string(line_no) + " is malformed");
    edges.emplace_back(a, b);
  }
  if (!have_header || !header.contains("n")) throw InvalidArgument("edge list is missing its JSON header");

  const int n = header["n"].get<int>();
  GraphSpec spec = GraphSpec::explicit_edges(n, edges);
  spec.validate();
  std::vector<Edge> internal;
  for (auto [a, b] : edges) internal.push_back(make_edge(a - 1, b - 1));
  Network net = Network::from_edges(n, internal);
  if (header.contains("misbehaving")) {
    auto ids = header["misbehaving"].get<std::vector<int>>();
    if (!ids.empty()) net = mark_misbehaving(net, ids);
  }
  return net;
}

}  // namespace fjres
