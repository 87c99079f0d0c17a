#pragma once

#include <httplib.h>

// <resolv.h> (pulled in by httplib) defines _res, which collides with Eigen's
// parameter names.
#ifdef _res
#undef _res
#endif
