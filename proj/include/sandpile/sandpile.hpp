#pragma once

// Library umbrella. The brute-force oracle is not included; it is a test and
// verification aid under sandpile/oracle/.

#include "sandpile/numeric.hpp"

#include "sandpile/abelian/counting.hpp"
#include "sandpile/abelian/group_spec.hpp"
#include "sandpile/abelian/partition.hpp"
#include "sandpile/abelian/small_group.hpp"
#include "sandpile/abelian/subgroups.hpp"

#include "sandpile/linalg/mod_matrix.hpp"
#include "sandpile/linalg/snf.hpp"

#include "sandpile/models/graph.hpp"
#include "sandpile/models/matrix.hpp"
#include "sandpile/models/rng.hpp"

#include "sandpile/theory/limits.hpp"

#include "sandpile/recover/hacts.hpp"
#include "sandpile/recover/solve.hpp"

#include "sandpile/harness/compare.hpp"
#include "sandpile/harness/experiment.hpp"
