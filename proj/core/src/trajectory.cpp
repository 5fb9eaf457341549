#include "orbitbounce/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace orbitbounce {

const DenseStep& DenseSegment::locate(double t) const {
  if (steps.empty()) throw std::logic_error("DenseSegment: empty");
  // binary search for the step containing t; clamp to the segment range
  auto it = std::upper_bound(steps.begin(), steps.end(), t,
                             [](double tt, const DenseStep& s) { return tt < s.t0; });
  if (it != steps.begin()) --it;
  return *it;
}

double BouncingTrajectory::r(double t) const {
  if (in_contact(t)) return 0.0;
  for (const auto& a : arcs) {
    if (t <= a.t_end() + 1e-300 && t >= a.t_begin()) return a.x(t);
  }
  // t between arcs (at an event time): clamp to nearest arc boundary
  const DenseSegment* best = nullptr;
  double bd = HUGE_VAL;
  for (const auto& a : arcs) {
    double d = std::min(std::abs(t - a.t_begin()), std::abs(t - a.t_end()));
    if (d < bd) { bd = d; best = &a; }
  }
  if (!best) throw std::out_of_range("BouncingTrajectory::r: no arcs");
  return best->x(std::clamp(t, best->t_begin(), best->t_end()));
}

double BouncingTrajectory::rdot(double t) const {
  if (in_contact(t)) return 0.0;
  for (const auto& a : arcs)
    if (t <= a.t_end() && t >= a.t_begin()) return a.v(t);
  throw std::out_of_range("BouncingTrajectory::rdot: time not covered by an arc");
}

double BouncingTrajectory::theta(double t) const {
  for (const auto& c : contacts)
    if (t >= c.t0 && t <= c.t1) return c.theta0 + c.theta_rate * (t - c.t0);
  for (const auto& a : arcs)
    if (t <= a.t_end() && t >= a.t_begin()) return a.theta(t);
  throw std::out_of_range("BouncingTrajectory::theta: time not covered");
}

PolarState BouncingTrajectory::state(double t) const {
  PolarState s;
  s.rho = r(t) + R0;
  s.v = in_contact(t) ? 0.0 : rdot(t);
  s.theta = theta(t);
  s.L = L;
  return s;
}

bool BouncingTrajectory::in_contact(double t) const {
  for (const auto& c : contacts)
    if (t >= c.t0 && t <= c.t1) return true;
  return false;
}

namespace {
void csv_row(std::ostream& os, double t, double rho, double rp, double th,
             const char* event) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%s\n", t, rho, rp, th, event);
  os << buf;
}
}  // namespace

void BouncingTrajectory::write_csv(std::ostream& os) const {
  os << "t,rho,rho_prime,theta,event\n";
  struct Row { double t, rho, rp, th; std::string ev; };
  std::vector<Row> rows;
  for (const auto& a : arcs) {
    for (const auto& s : a.steps) {
      if (s.t0 >= a.t_begin() && s.t0 <= a.t_end())
        rows.push_back({s.t0, a.x(s.t0) + R0, a.v(s.t0), a.theta(s.t0), ""});
    }
    double te = a.t_end();
    rows.push_back({te, a.x(te) + R0, a.v(te), a.theta(te), ""});
  }
  for (const auto& e : impacts) {
    rows.push_back({e.t, R0, e.speed_in, theta(e.t), "impact"});
    rows.push_back({e.t, R0, e.speed_out, theta(e.t), "impact"});
  }
  for (const auto& c : contacts) {
    rows.push_back({c.t0, R0, 0.0, c.theta0, "contact_start"});
    rows.push_back({c.t1, R0, 0.0, c.theta0 + c.theta_rate * (c.t1 - c.t0), "contact_end"});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.t != b.t) return a.t < b.t;
    // at an impact time, the incoming row (rho_prime < 0) precedes
    return false;
  });
  // drop duplicate plain rows that coincide with event rows
  std::vector<Row> out;
  for (auto& r : rows) {
    if (!out.empty() && r.ev.empty() && out.back().t == r.t && !out.back().ev.empty())
      continue;
    if (!r.ev.empty())
      while (!out.empty() && out.back().t == r.t && out.back().ev.empty()) out.pop_back();
    out.push_back(std::move(r));
  }
  for (const auto& r : out) csv_row(os, r.t, r.rho, r.rp, r.th, r.ev.c_str());
}

SampledTrajectory read_trajectory_csv(std::istream& is) {
  SampledTrajectory tr;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trajectory CSV: empty file");
  // tolerate trailing \r from other platforms
  auto strip = [](std::string& s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  };
  strip(line);
  if (line != "t,rho,rho_prime,theta,event")
    throw std::runtime_error("trajectory CSV: bad header: " + line);
  size_t lineno = 1;
  double prev_t = -HUGE_VAL;
  while (std::getline(is, line)) {
    ++lineno;
    strip(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    double vals[4];
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(ss, field, ','))
        throw std::runtime_error("trajectory CSV: short row at line " + std::to_string(lineno));
      size_t pos = 0;
      vals[i] = std::stod(field, &pos);
      if (pos != field.size())
        throw std::runtime_error("trajectory CSV: bad number at line " + std::to_string(lineno));
    }
    std::string ev;
    std::getline(ss, ev, ',');
    if (!(ev.empty() || ev == "impact" || ev == "contact_start" || ev == "contact_end"))
      throw std::runtime_error("trajectory CSV: unknown event '" + ev + "'");
    if (vals[0] < prev_t)
      throw std::runtime_error("trajectory CSV: times not ascending at line " + std::to_string(lineno));
    prev_t = vals[0];
    tr.t.push_back(vals[0]);
    tr.rho.push_back(vals[1]);
    tr.rho_prime.push_back(vals[2]);
    tr.theta.push_back(vals[3]);
    tr.event.push_back(ev);
  }
  return tr;
}

}  // namespace orbitbounce
