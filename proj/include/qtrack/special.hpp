#pragma once

namespace qtrack {

// psi'(z) for z > 0, relative error below 1e-13. Throws DomainError otherwise.
double trigamma(double z);

}  // namespace qtrack
