"""
What the PID controller does to a stream of errors
==================================================

Each known entry keeps its own running sum and previous error.  We feed a
hand-written sequence through the controller and print every term.
"""
import numpy as np

from pslf import PidGains, init_pid, refine_errors

gains = PidGains(kp=1.5, ki=0.005, kd=0.05)
pid = init_pid(1)
for e in [2.0, 1.0, 0.5, 0.5, -0.2]:
    prev = pid.prev_error[0]
    out = refine_errors(pid, np.array([e]), gains)[0]
    print(f"epoch {pid.epoch}: e={e:+.2f}  sum={pid.integral[0]:+.3f}  "
          f"diff={e - prev:+.2f}  refined={out:+.4f}")
# epoch 2 gives 1.5*1 + 0.005*3 + 0.05*(1-2) = 1.465

# with gains (1, 0, 0) the controller is the identity
pid = init_pid(3)
e = np.array([0.3, -1.2, 4.0])
print("identity:", np.array_equal(refine_errors(pid, e, PidGains(1, 0, 0)), e))
