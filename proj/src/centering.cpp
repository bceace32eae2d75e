#include "dpdro/centering.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdro {

Centering Centering::empirical(std::shared_ptr<const Dataset> data) {
    if (!data || data->n() == 0)
        throw std::invalid_argument("Centering::empirical: dataset must be nonempty");
    Centering c;
    c.kind_ = Kind::Empirical;
    c.xdim_ = data->dim();
    c.data_ = std::move(data);
    return c;
}

Centering Centering::standard_normal(int xiDim) {
    if (xiDim < 1) throw std::invalid_argument("Centering::standard_normal: xiDim must be >= 1");
    Centering c;
    c.kind_ = Kind::StandardNormal;
    c.xdim_ = xiDim - 1;
    return c;
}

Centering Centering::product_binary_normal(int xiDim) {
    if (xiDim < 1)
        throw std::invalid_argument("Centering::product_binary_normal: xiDim must be >= 1");
    Centering c;
    c.kind_ = Kind::ProductBinaryNormal;
    c.xdim_ = xiDim - 1;
    return c;
}

Centering Centering::measure_atoms(std::shared_ptr<const DiscreteMeasure> measure) {
    if (!measure || measure->size() == 0)
        throw std::invalid_argument("Centering::measure_atoms: measure must be nonempty");
    Centering c;
    c.kind_ = Kind::MeasureAtoms;
    c.xdim_ = measure->dim();
    c.measure_ = std::move(measure);
    return c;
}

Centering Centering::mixture(std::vector<std::pair<double, Centering>> parts) {
    if (parts.empty()) throw std::invalid_argument("Centering::mixture: empty component list");
    Centering c;
    c.kind_ = Kind::Mixture;
    c.xdim_ = parts.front().second.feature_dim();
    double total = 0.0;
    for (auto& [w, part] : parts) {
        if (!(w >= 0.0)) throw std::invalid_argument("Centering::mixture: negative weight");
        if (part.feature_dim() != c.xdim_)
            throw std::invalid_argument("Centering::mixture: components disagree on feature dim");
        total += w;
        c.weights_.push_back(w);
        c.parts_.push_back(std::make_shared<Centering>(std::move(part)));
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("Centering::mixture: weights must sum to 1");
    return c;
}

Eigen::Index Centering::feature_dim() const { return xdim_; }

Centering::Draw Centering::sample(Rng& rng) const {
    Draw d;
    switch (kind_) {
    case Kind::Empirical: {
        const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(data_->n())));
        d.y = data_->y[i];
        d.x = data_->X.row(i);
        d.origin = AtomOrigin::TrainData;
        return d;
    }
    case Kind::StandardNormal: {
        d.y = rng.normal();
        d.x.resize(xdim_);
        for (Eigen::Index j = 0; j < xdim_; ++j) d.x[j] = rng.normal();
        d.origin = AtomOrigin::PriorDraw;
        return d;
    }
    case Kind::ProductBinaryNormal: {
        d.y = rng.uniform() < 0.5 ? 1.0 : -1.0;
        d.x.resize(xdim_);
        for (Eigen::Index j = 0; j < xdim_; ++j) d.x[j] = rng.normal();
        d.origin = AtomOrigin::PriorDraw;
        return d;
    }
    case Kind::MeasureAtoms: {
        const double u = rng.uniform();
        double cum = 0.0;
        Eigen::Index pick = measure_->size() - 1;
        for (Eigen::Index j = 0; j < measure_->size(); ++j) {
            cum += measure_->weights[j];
            if (u < cum) {
                pick = j;
                break;
            }
        }
        d.y = measure_->atomY[pick];
        d.x = measure_->atomX.row(pick);
        d.origin = measure_->origin[static_cast<std::size_t>(pick)];
        return d;
    }
    case Kind::Mixture: {
        const double u = rng.uniform();
        double cum = 0.0;
        std::size_t pick = parts_.size() - 1;
        for (std::size_t j = 0; j < parts_.size(); ++j) {
            cum += weights_[j];
            if (u < cum) {
                pick = j;
                break;
            }
        }
        return parts_[pick]->sample(rng);
    }
    }
    throw std::logic_error("Centering: unknown kind");
}

} // namespace dpdro
