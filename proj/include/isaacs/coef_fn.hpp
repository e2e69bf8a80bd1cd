#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "isaacs/errors.hpp"
#include "isaacs/types.hpp"

namespace isaacs {

/// Scalar coefficient families accepted from problem files.
namespace fn {

struct Constant {
    double value = 0.0;
};

/// c0 + grad.x
struct Affine {
    double c0 = 0.0;
    Point grad;
};

/// c0 + grad.x + x'Hx/2
struct Quadratic {
    double c0 = 0.0;
    Point grad;
    SqMat hess;
};

/// c0 + amp * sin(freq.x + phase)
struct Trig {
    double c0 = 0.0;
    double amp = 0.0;
    Point freq;
    double phase = 0.0;
};

/// Piecewise-linear table along one axis, constant beyond the end knots.
struct Piecewise {
    int axis = 0;
    std::vector<double> knots;
    std::vector<double> values;
};

/// In-memory composition (e.g. the zero-boundary reduction). Not serializable.
struct Derived {
    std::shared_ptr<const std::function<double(const Point&)>> eval;
};

}  // namespace fn

class CoefFn {
public:
    using Variant = std::variant<fn::Constant, fn::Affine, fn::Quadratic, fn::Trig, fn::Piecewise, fn::Derived>;

    CoefFn() : v_(fn::Constant{0.0}) {}
    CoefFn(double value) : v_(fn::Constant{value}) {}  // NOLINT: implicit by design
    CoefFn(Variant v) : v_(std::move(v)) { check(); }  // NOLINT

    static CoefFn derived(std::function<double(const Point&)> f) {
        return CoefFn(fn::Derived{std::make_shared<const std::function<double(const Point&)>>(std::move(f))});
    }

    double operator()(const Point& x) const {
        return std::visit([&](const auto& s) { return eval(s, x); }, v_);
    }

    bool is_constant() const { return std::holds_alternative<fn::Constant>(v_); }
    bool is_zero() const { return is_constant() && std::get<fn::Constant>(v_).value == 0.0; }
    /// Closed-form gradient and Hessian available.
    bool has_hessian() const {
        return std::holds_alternative<fn::Constant>(v_) || std::holds_alternative<fn::Affine>(v_) ||
               std::holds_alternative<fn::Quadratic>(v_) || std::holds_alternative<fn::Trig>(v_);
    }
    bool serializable() const { return !std::holds_alternative<fn::Derived>(v_); }
    const Variant& variant() const { return v_; }

    Point gradient(const Point& x) const {
        Point g = Point::Zero(x.size());
        if (const auto* a = std::get_if<fn::Affine>(&v_)) {
            g = a->grad;
        } else if (const auto* q = std::get_if<fn::Quadratic>(&v_)) {
            g = q->grad + q->hess * x;
        } else if (const auto* t = std::get_if<fn::Trig>(&v_)) {
            g = t->amp * std::cos(t->freq.dot(x) + t->phase) * t->freq;
        } else if (!is_constant()) {
            throw ConfigError("coefficient function has no closed-form gradient");
        }
        return g;
    }

    SqMat hessian(const Point& x) const {
        SqMat h = SqMat::Zero(x.size(), x.size());
        if (const auto* q = std::get_if<fn::Quadratic>(&v_)) {
            h = q->hess;
        } else if (const auto* t = std::get_if<fn::Trig>(&v_)) {
            h = -t->amp * std::sin(t->freq.dot(x) + t->phase) * (t->freq * t->freq.transpose());
        } else if (!has_hessian()) {
            throw ConfigError("coefficient function has no closed-form Hessian");
        }
        return h;
    }

private:
    static double eval(const fn::Constant& s, const Point&) { return s.value; }
    static double eval(const fn::Affine& s, const Point& x) { return s.c0 + s.grad.dot(x); }
    static double eval(const fn::Quadratic& s, const Point& x) {
        return s.c0 + s.grad.dot(x) + 0.5 * x.dot(s.hess * x);
    }
    static double eval(const fn::Trig& s, const Point& x) {
        return s.c0 + s.amp * std::sin(s.freq.dot(x) + s.phase);
    }
    static double eval(const fn::Piecewise& s, const Point& x) {
        const double t = x(s.axis);
        const auto& k = s.knots;
        if (t <= k.front()) return s.values.front();
        if (t >= k.back()) return s.values.back();
        const auto it = std::upper_bound(k.begin(), k.end(), t);
        const auto i = static_cast<std::size_t>(it - k.begin()) - 1;
        const double w = (t - k[i]) / (k[i + 1] - k[i]);
        return (1.0 - w) * s.values[i] + w * s.values[i + 1];
    }
    static double eval(const fn::Derived& s, const Point& x) { return (*s.eval)(x); }

    void check() const {
        if (const auto* p = std::get_if<fn::Piecewise>(&v_)) {
            if (p->knots.size() < 2 || p->knots.size() != p->values.size())
                throw ConfigError("piecewise table needs >= 2 knots and matching values");
            for (std::size_t i = 1; i < p->knots.size(); ++i)
                if (!(p->knots[i] > p->knots[i - 1])) throw ConfigError("piecewise knots must increase strictly");
            if (p->axis < 0 || p->axis >= kMaxDim) throw ConfigError("piecewise axis out of range");
        }
        if (const auto* q = std::get_if<fn::Quadratic>(&v_)) {
            if (q->hess.rows() != q->grad.size() || q->hess.cols() != q->grad.size())
                throw ConfigError("quadratic Hessian shape does not match gradient");
        }
    }

    Variant v_;
};

}  // namespace isaacs
