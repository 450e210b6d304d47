#include "miloc/scenario.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "miloc/error.hpp"

namespace miloc {

std::vector<Deployment> Topology::nodes() const {
  std::vector<Deployment> out = agents;
  out.insert(out.end(), anchors.begin(), anchors.end());
  return out;
}

std::vector<Deployment> default_anchors(const Room& room) {
  const Vec3 lo = room.min_corner, hi = room.max_corner, c = room.center();
  return {
      Deployment(Vec3(c.x(), lo.y(), c.z()), {}),
      Deployment(Vec3(hi.x(), c.y(), c.z()), {}),
      Deployment(Vec3(c.x(), hi.y(), c.z()), {}),
      Deployment(Vec3(lo.x(), c.y(), c.z()), {}),
  };
}

namespace {

bool far_enough(const Vec3& p, const std::vector<Deployment>& others, std::size_t count, double min_dist) {
  for (std::size_t i = 0; i < count; ++i) {
    if ((others[i].position() - p).norm() < min_dist) return false;
  }
  return true;
}

}  // namespace

Topology sample_topology(std::size_t num_agents, const Room& room, std::vector<Deployment> anchors,
                         double min_dist, Rng& rng, std::size_t max_attempts) {
  Topology top;
  top.room = room;
  top.anchors = std::move(anchors);
  top.agents.reserve(num_agents);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    top.agents.clear();
    bool ok = true;
    for (std::size_t m = 0; m < num_agents && ok; ++m) {
      const Vec3 p = room.sample_uniform(rng);
      const Mat3 R = sample_uniform_rotation(rng);
      ok = far_enough(p, top.anchors, top.anchors.size(), min_dist) &&
           far_enough(p, top.agents, top.agents.size(), min_dist);
      top.agents.push_back(Deployment::from_rotation(p, R));
    }
    if (ok) return top;
  }
  throw Error(ErrorKind::PackingInfeasible, "no admissible topology after " + std::to_string(max_attempts) +
                                                " attempts");
}

std::vector<std::string> check_topology(const Topology& top, double min_dist) {
  std::vector<std::string> issues;
  if (!top.room.valid()) issues.push_back("room corners are not ordered");
  for (std::size_t m = 0; m < top.agents.size(); ++m) {
    const Vec3& p = top.agents[m].position();
    if (!top.room.strictly_contains(p)) issues.push_back("agent " + std::to_string(m) + " outside room");
    if (!is_rotation(top.agents[m].rotation(), 1e-10)) {
      issues.push_back("agent " + std::to_string(m) + " orientation is not a rotation");
    }
    for (std::size_t n = m + 1; n < top.agents.size(); ++n) {
      if ((top.agents[n].position() - p).norm() < min_dist) {
        issues.push_back("agents " + std::to_string(m) + " and " + std::to_string(n) + " too close");
      }
    }
    for (std::size_t k = 0; k < top.anchors.size(); ++k) {
      if ((top.anchors[k].position() - p).norm() < min_dist) {
        issues.push_back("agent " + std::to_string(m) + " too close to anchor " + std::to_string(k));
      }
    }
  }
  return issues;
}

std::vector<LinkMeasurement> model_links(const Topology& top, const CouplingTable& coupling, Scheme scheme) {
  const std::size_t M = top.agents.size();
  const std::size_t nodes = M + top.anchors.size();
  std::vector<LinkMeasurement> links;
  links.reserve(M * (scheme == Scheme::Cooperative ? nodes - 1 : top.anchors.size()));
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t n = scheme == Scheme::Cooperative ? 0 : M; n < nodes; ++n) {
      if (n == m) continue;
      const Deployment& rx = n < M ? top.agents[n] : top.anchors[n - M];
      links.push_back(LinkMeasurement{m, n, channel_matrix(top.agents[m], rx, coupling(m, n)),
                                      n < M ? LinkKind::AgentAgent : LinkKind::AgentAnchor});
    }
  }
  return links;
}

MeasurementSet synthesize_measurements(const Topology& top, const CouplingTable& coupling, Scheme scheme,
                                       double sigma, Rng& rng) {
  MeasurementSet out;
  out.scheme = scheme;
  out.links = model_links(top, coupling, scheme);
  for (auto& l : out.links) l.h = add_noise(l.h, sigma, rng);
  return out;
}

LsProblem make_problem(const Topology& top, const MeasurementSet& meas, const CouplingTable& coupling) {
  return LsProblem(meas.links, top.anchors, top.agents.size(), coupling, meas.scheme);
}

void write_topology(std::ostream& os, const Topology& top) {
  os << std::setprecision(17);
  os << "# room " << top.room.min_corner.x() << ' ' << top.room.min_corner.y() << ' ' << top.room.min_corner.z()
     << ' ' << top.room.max_corner.x() << ' ' << top.room.max_corner.y() << ' ' << top.room.max_corner.z() << '\n';
  os << "# seed " << top.seed << '\n';
  os << "# id kind x y z alpha beta gamma\n";
  std::size_t id = 0;
  auto row = [&os, &id](const char* kind, const Deployment& d) {
    const auto& p = d.position();
    const auto& e = d.euler();
    os << id++ << ' ' << kind << ' ' << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << e.alpha << ' ' << e.beta
       << ' ' << e.gamma << '\n';
  };
  for (const auto& a : top.agents) row("agent", a);
  for (const auto& a : top.anchors) row("anchor", a);
}

Topology read_topology(std::istream& is) {
  Topology top;
  bool have_room = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "#") {
      std::string key;
      ls >> key;
      if (key == "room") {
        Room r;
        if (!(ls >> r.min_corner.x() >> r.min_corner.y() >> r.min_corner.z() >> r.max_corner.x() >>
              r.max_corner.y() >> r.max_corner.z()) ||
            !r.valid()) {
          throw Error(ErrorKind::Io, "line " + std::to_string(line_no) + ": bad room header");
        }
        top.room = r;
        have_room = true;
      } else if (key == "seed") {
        ls >> top.seed;
      }
      continue;
    }
    if (first.front() == '#') continue;
    std::string kind;
    double x, y, z, a, b, g;
    if (!(ls >> kind >> x >> y >> z >> a >> b >> g)) {
      throw Error(ErrorKind::Io, "line " + std::to_string(line_no) + ": expected id kind x y z alpha beta gamma");
    }
    const Deployment d(Vec3(x, y, z), EulerAngles{a, b, g});
    if (kind == "agent") {
      top.agents.push_back(d);
    } else if (kind == "anchor") {
      top.anchors.push_back(d);
    } else {
      throw Error(ErrorKind::Io, "line " + std::to_string(line_no) + ": unknown node kind '" + kind + "'");
    }
  }
  if (!have_room) top.room = Room::cube(1.5);
  return top;
}

}  // namespace miloc
