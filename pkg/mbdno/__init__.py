"""
mbdno learns the response of a coupled vehicle-track system with a Fourier
neural operator.

Most important parts are:
- `load_parameters` and `build_system`: the vehicle-track equations of motion.
- `synthesize`: random rail irregularities with a given spectrum.
- `integrate`: time integration of one trajectory (Zhai, Newmark, RK4).
- `generate_dataset`: data pairs for training, stored in a binary container.
- `FnoModel`: the operator, trained by `mbdno.pipeline.train`.

Simulation example:
```python
import mbdno

params = mbdno.load_parameters()
system = mbdno.build_system(params)
profile = mbdno.synthesize(mbdno.load_psd(), params.beam.length, 0.05, seed=1)
excitation = mbdno.WheelExcitation(profile, system.wheel_start, system.speed)
record = mbdno.integrate(system, excitation)
```

Note: Undocumented functions and classes are not part of the public API.
"""

from .dataset.generate import generate_dataset  # noqa
from .excitation.profile import WheelExcitation, synthesize  # noqa
from .excitation.psd import load_psd  # noqa
from .fno.model import FnoConfig, FnoModel, init_parameters  # noqa
from .integrate.config import IntegratorConfig  # noqa
from .integrate.trajectory import integrate  # noqa
from .mbd.codes import build_system  # noqa
from .mbd.params import load_parameters  # noqa
from .version import VERSION  # noqa
