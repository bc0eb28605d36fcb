#pragma once

// Planar disc bodies with semi-implicit Euler integration, linear drag and
// impulse-based collisions. Each body carries an upright scalar u in [0,1]
// that drops with received impulse and recovers at a fixed rate.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "selfplay/nn/tensor.hpp"

namespace selfplay {

struct PhysicsConfig {
  double dt = 0.05;
  double drag = 1.0;
  double max_force = 3.0;
  double body_mass = 1.0;
  double body_radius = 0.5;
  double restitution = 0.5;
  double upright_damage = 0.25;    // u lost per unit received collision impulse
  double upright_recovery = 0.01;  // u regained per step
  double fall_threshold = 0.5;
  double ball_mass = 0.3;
  double ball_radius = 0.3;
  double ball_drag = 0.5;
  // u lost per unit of unbraced external force per unit time
  double external_upright_coeff = 0.5;
};

struct Body {
  Vec2 pos = Vec2::Zero();
  Vec2 vel = Vec2::Zero();
  double radius = 0.5;
  double mass = 1.0;
  double upright = 1.0;
  bool active = true;
};

struct Ball {
  Vec2 pos = Vec2::Zero();
  Vec2 vel = Vec2::Zero();
  double radius = 0.3;
  double mass = 0.3;
};

// Axis-aligned box; bodies and the ball are kept inside it.
struct Walls {
  double x_min = -1e9, x_max = 1e9, y_min = -1e9, y_max = 1e9;
};

struct WorldState {
  std::array<Body, 2> bodies;
  std::optional<Ball> ball;
  double goal_x = 0.0;
  double arena_radius = 0.0;
  int step = 0;
  int horizon = 500;

  int time_remaining() const { return horizon - step; }
};

struct CollisionReport {
  std::array<double, 2> body_impulse{0.0, 0.0};
  std::array<bool, 2> touched_ball{false, false};
  int contacts = 0;
};

inline bool is_fallen(const Body& b, const PhysicsConfig& cfg) { return b.upright < cfg.fall_threshold; }

namespace detail {

// Share of the collision damage taken by the first body: proportional to the
// other body's approach speed along the contact normal.
inline double struck_share(double own_approach, double other_approach) {
  own_approach = std::max(0.0, own_approach);
  other_approach = std::max(0.0, other_approach);
  const double s = own_approach + other_approach;
  return s > 0.0 ? other_approach / s : 0.5;
}

struct Contact {
  double impulse = 0.0;
  double share_a = 0.5;
  bool hit = false;
};

inline Contact resolve_pair(Vec2& pa, Vec2& va, double ma, double ra, Vec2& pb, Vec2& vb, double mb, double rb,
                            double restitution) {
  Contact c;
  Vec2 d = pb - pa;
  const double dist = d.norm();
  const double min_dist = ra + rb;
  if (dist >= min_dist) return c;
  const Vec2 n = dist > 1e-12 ? Vec2(d / dist) : Vec2(1.0, 0.0);
  const double inv_a = 1.0 / ma, inv_b = 1.0 / mb;
  const double vn = (vb - va).dot(n);
  if (vn < 0.0) {
    const double j = -(1.0 + restitution) * vn / (inv_a + inv_b);
    c.share_a = struck_share(va.dot(n), -vb.dot(n));
    va -= (j * inv_a) * n;
    vb += (j * inv_b) * n;
    c.impulse = j;
  }
  // positional correction, split by inverse mass (momentum untouched)
  const double overlap = min_dist - dist;
  pa -= (overlap * inv_a / (inv_a + inv_b)) * n;
  pb += (overlap * inv_b / (inv_a + inv_b)) * n;
  c.hit = true;
  return c;
}

inline void keep_inside(Vec2& p, Vec2& v, double r, const Walls& w, double bounce) {
  if (p.x() - r < w.x_min) { p.x() = w.x_min + r; if (v.x() < 0) v.x() = -bounce * v.x(); }
  if (p.x() + r > w.x_max) { p.x() = w.x_max - r; if (v.x() > 0) v.x() = -bounce * v.x(); }
  if (p.y() - r < w.y_min) { p.y() = w.y_min + r; if (v.y() < 0) v.y() = -bounce * v.y(); }
  if (p.y() + r > w.y_max) { p.y() = w.y_max - r; if (v.y() > 0) v.y() = -bounce * v.y(); }
}

}  // namespace detail

// Advances one step. `forces` are world-frame actuation forces (already
// clipped and scaled); `external` are perturbation forces such as wind, which
// also destabilise a body unless it pushes against them.
inline CollisionReport physics_step(WorldState& s, const std::array<Vec2, 2>& forces, const PhysicsConfig& cfg,
                                    const Walls& walls = {}, const std::array<Vec2, 2>& external = {Vec2::Zero(), Vec2::Zero()}) {
  CollisionReport rep;
  const double dt = cfg.dt;
  for (int i = 0; i < 2; ++i) {
    Body& b = s.bodies[i];
    if (!b.active) continue;
    const Vec2 total = forces[i] + external[i];
    b.vel += (total / b.mass - cfg.drag * b.vel) * dt;
    b.pos += b.vel * dt;
    const double ext = external[i].norm();
    if (ext > 0.0) {
      const double brace = std::max(0.0, -forces[i].dot(external[i] / ext));
      b.upright -= cfg.external_upright_coeff * std::max(0.0, ext - brace) * dt;
    }
  }
  if (s.ball) {
    Ball& ball = *s.ball;
    ball.vel -= cfg.ball_drag * ball.vel * dt;
    ball.pos += ball.vel * dt;
  }

  std::array<double, 2> damage{0.0, 0.0};
  Body& a = s.bodies[0];
  Body& b = s.bodies[1];
  if (a.active && b.active) {
    auto c = detail::resolve_pair(a.pos, a.vel, a.mass, a.radius, b.pos, b.vel, b.mass, b.radius, cfg.restitution);
    if (c.hit) ++rep.contacts;
    rep.body_impulse[0] += c.impulse;
    rep.body_impulse[1] += c.impulse;
    damage[0] += c.impulse * c.share_a;
    damage[1] += c.impulse * (1.0 - c.share_a);
  }
  if (s.ball) {
    Ball& ball = *s.ball;
    for (int i = 0; i < 2; ++i) {
      Body& body = s.bodies[i];
      if (!body.active) continue;
      auto c = detail::resolve_pair(body.pos, body.vel, body.mass, body.radius, ball.pos, ball.vel, ball.mass,
                                    ball.radius, cfg.restitution);
      if (c.hit) {
        ++rep.contacts;
        rep.touched_ball[i] = true;
      }
      rep.body_impulse[i] += c.impulse;
      damage[i] += c.impulse * c.share_a;
    }
  }

  for (int i = 0; i < 2; ++i) {
    Body& body = s.bodies[i];
    if (!body.active) continue;
    detail::keep_inside(body.pos, body.vel, body.radius, walls, 0.0);
    body.upright -= cfg.upright_damage * damage[i];
    body.upright = std::clamp(body.upright + cfg.upright_recovery, 0.0, 1.0);
  }
  if (s.ball) detail::keep_inside(s.ball->pos, s.ball->vel, s.ball->radius, walls, cfg.restitution);
  ++s.step;
  return rep;
}

}  // namespace selfplay
