"""Fekete energies of iterated preimages under rational maps of the sphere."""

from .errors import BudgetError, DegenerateMapError, FeketeError, InvalidInput, NumericFailure
from .projline import ProjPoint, chordal, wedge
from .ratmap import HomLift, critical_points, resultant
from .parser import parse_map
from .potential import GreenEvaluator, escape_rate, green_gf, phi_f
from .pullback import PreimageTree, pullback
from .fekete import EnergyReport, EnergyStudy, c_z, energy_cz, energy_direct, fekete_energy
from .equidist import builtin, equidist_error, integrate_mu_f
from .nonarch import PadicBall, delta_can, gauss_green, hsia, rho, vf_padic

__version__ = "0.1.0"
