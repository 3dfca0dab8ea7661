# coding: utf-8

# # How loose is the sampling error bound?
#
# The bound on the sampled-HOSVD error has three kinds of terms: the
# truncation residual of the original tensor, two sampling terms that grow
# like 1/sqrt(p), and the truncation residuals of the sample itself. Its
# assumptions ask for large dimensions and a keep probability above p_min.

# In[1]:

import numpy as np

from machtensor import (
    DenseTensor,
    SparsifyConfig,
    mach_hosvd,
    min_sampling_probability,
    reconstruct,
    synth_cauchy_tensor,
    tensor_norm,
    theorem1_bound,
)

for n in (80, 200, 1000, 10**5):
    print(f"p_min for {n}^3 = {min_sampling_probability((n, n, n)):.4g}")


# p_min only drops below one for very large modes, so at desk scale the
# bound is evaluated with its assumptions flagged as unmet.

# In[2]:

x = synth_cauchy_tensor(80)
ranks, p = (4, 4, 4), 0.1
model, xhat = mach_hosvd(x, ranks, SparsifyConfig(p, seed=0))
report = theorem1_bound(x, xhat, ranks, p)
print(report.to_text())


# Compare with the error actually made.

# In[3]:

error = tensor_norm(DenseTensor(x.data - reconstruct(model).data))
print(f"measured error {error:.4f}, bound {report.t:.1f}, ratio {report.t / error:.0f}x")
