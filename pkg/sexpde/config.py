"""Study configuration files.

A configuration is a plain ``key = value`` file split into ``[mesh]``,
``[problem]``, ``[noise]``, ``[krylov]`` and ``[study]`` sections::

    [study]
    seed = 20240917
    functional = phi2
    dt_ladder = 1/4, 1/8, 1/16, 1/32, 1/64

Every section is declared as a class whose ``Setting`` attributes are
collected in declaration order, the same way tables collect their
columns. Anything the schema does not know is rejected.
"""

import configparser
import logging
import math
from collections import OrderedDict
from fractions import Fraction

from .exceptions import ConfigError
from .experiments import NoiseSettings, WeakErrorConfig
from .fem import BoundaryKind
from .integrator import RunConfig
from .matfunc import KrylovConfig
from .model import InitialValue, presets


__all__ = (
    'Setting', 'Int', 'Float', 'Rational', 'Choice', 'Bool', 'List',
    'Section', 'StudyConfig', 'parse_config', 'COMMANDS',
)

log = logging.getLogger(__name__)


COMMANDS = ('simulate', 'converge-time', 'converge-space', 'strong-study',
            'selftest')

REQUIRED = object()

# noise modes per axis at published scale unless [noise] n_max says
# otherwise; the mesh-matched default of a 150 x 150 mesh projects 22801
# modes
PUBLISHED_N_MAX = 50


def _fraction_text(value):
    if value.denominator == 1:
        return str(value.numerator)
    return '%d/%d' % (value.numerator, value.denominator)


class Setting(object):
    """A single configuration key.

    ``default`` is used when the key is absent; ``None`` means the key
    is optional and ``REQUIRED`` that it has to be given somewhere.
    ``auto`` lets the literal word ``auto`` stand for ``None``.
    """

    creation_counter = 0

    def __init__(self, default=None, auto=False):
        self.default = default
        self.auto = auto
        self.creation_counter = Setting.creation_counter
        Setting.creation_counter += 1

    def parse(self, text):
        text = text.strip()
        if self.auto and text == 'auto':
            return None
        return self.to_python(text)

    def to_python(self, text):
        return text

    def render(self, value):
        if value is None:
            return 'auto'
        return str(value)


class Int(Setting):
    def __init__(self, default=None, minimum=None, **kwargs):
        super(Int, self).__init__(default, **kwargs)
        self.minimum = minimum

    def to_python(self, text):
        try:
            value = int(text)
        except ValueError:
            raise ValueError('expected an integer, got %r' % text)
        if self.minimum is not None and value < self.minimum:
            raise ValueError('must be >= %d, got %d' % (self.minimum, value))
        return value


class Float(Setting):
    def __init__(self, default=None, positive=False, nonnegative=False,
                 **kwargs):
        super(Float, self).__init__(default, **kwargs)
        self.positive = positive
        self.nonnegative = nonnegative

    def to_python(self, text):
        try:
            value = float(Fraction(text))
        except (ValueError, ZeroDivisionError):
            raise ValueError('expected a number, got %r' % text)
        if not math.isfinite(value):
            raise ValueError('must be finite, got %r' % text)
        if self.positive and not value > 0:
            raise ValueError('must be positive, got %r' % text)
        if self.nonnegative and value < 0:
            raise ValueError('must be non-negative, got %r' % text)
        return value

    def render(self, value):
        if value is None:
            return 'auto'
        return '%.17g' % value


class Rational(Setting):
    """A positive number kept exact, written ``0.25`` or ``1/4``."""

    def to_python(self, text):
        try:
            value = Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ValueError('expected a number such as 0.25 or 1/4, got %r'
                             % text)
        if not value > 0:
            raise ValueError('must be positive, got %r' % text)
        return value

    def render(self, value):
        return _fraction_text(value)


class Record(Setting):
    """``none``, ``final`` or every how many steps to keep a state."""

    def to_python(self, text):
        if text in ('none', 'final'):
            return text
        try:
            value = int(text)
        except ValueError:
            value = 0
        if value < 1:
            raise ValueError('must be none, final or a positive integer, '
                             'got %r' % text)
        return value


class Choice(Setting):
    def __init__(self, choices, default=None, **kwargs):
        super(Choice, self).__init__(default, **kwargs)
        self.choices = tuple(choices)

    def to_python(self, text):
        if text not in self.choices:
            raise ValueError('must be one of %s, got %r'
                             % (', '.join(self.choices), text))
        return text


class Bool(Setting):
    states = configparser.ConfigParser.BOOLEAN_STATES

    def to_python(self, text):
        try:
            return self.states[text.lower()]
        except KeyError:
            raise ValueError('expected a boolean, got %r' % text)

    def render(self, value):
        return value and 'yes' or 'no'


class List(Setting):
    """Comma separated values of another setting type."""

    def __init__(self, item, default=(), **kwargs):
        super(List, self).__init__(tuple(default), **kwargs)
        self.item = item

    def to_python(self, text):
        if not text:
            return ()
        return tuple(self.item.parse(part) for part in text.split(','))

    def render(self, value):
        return ', '.join(self.item.render(v) for v in value)


class DeclarativeSettingsMetaclass(type):
    """Collects ``Setting`` attributes into an ordered ``base_settings``."""

    def __new__(cls, name, bases, attrs):
        settings = [
            (setting_name, attrs.pop(setting_name))
            for setting_name, obj in list(attrs.items())
            if isinstance(obj, Setting)
        ]
        settings.sort(key=lambda x: x[1].creation_counter)
        for base in bases[::-1]:
            if hasattr(base, 'base_settings'):
                settings = list(base.base_settings.items()) + settings
        attrs['base_settings'] = OrderedDict(settings)
        return type.__new__(cls, name, bases, attrs)


class Section(metaclass=DeclarativeSettingsMetaclass):
    name = None

    @classmethod
    def parse(cls, items):
        """Values of this section from ``(key, text)`` pairs, defaults
        filled in."""
        values = OrderedDict()
        for key, text in items:
            if key not in cls.base_settings:
                raise ConfigError('%s.%s' % (cls.name, key), 'unknown key')
            try:
                values[key] = cls.base_settings[key].parse(text)
            except ValueError as e:
                raise ConfigError('%s.%s' % (cls.name, key), str(e))
        for key, setting in cls.base_settings.items():
            values.setdefault(key, setting.default)
        return OrderedDict((k, values[k]) for k in cls.base_settings)

    @classmethod
    def render(cls, values):
        lines = ['[%s]' % cls.name]
        for key, setting in cls.base_settings.items():
            value = values[key]
            if value is REQUIRED:
                continue
            lines.append('%s = %s' % (key, setting.render(value)))
        return lines


class MeshSection(Section):
    name = 'mesh'
    nx = Int(32, minimum=1)
    ny = Int(None, minimum=1, auto=True)
    L1 = Float(1.0, positive=True)
    L2 = Float(1.0, positive=True)
    bc = Choice(BoundaryKind.choices, BoundaryKind.NEUMANN)
    alpha0 = Float(0.0, nonnegative=True)
    lumped = Bool(False)


class ProblemSection(Section):
    name = 'problem'
    preset = Choice(sorted(presets), 'linear2d')
    D = Float(0.1, positive=True)
    reaction = Float(0.5)
    shift = Float(0.0)
    advection_x = Float(0.0)
    advection_y = Float(0.0)
    initial = Choice(
        ('zero', 'smooth', 'smooth-offset', 'constant', 'mode11'), None,
        auto=True)
    project_drift = Bool(False)
    lipschitz = Float(None, nonnegative=True, auto=True)


class NoiseSection(Section):
    name = 'noise'
    beta = Float(1.0, nonnegative=True)
    delta = Float(0.001, nonnegative=True)
    n_max = Int(None, minimum=1, auto=True)
    q00 = Float(0.0, nonnegative=True)


class KrylovSection(Section):
    name = 'krylov'
    max_subspace = Int(64, minimum=2)
    tol = Float(1e-8, positive=True)
    substeps = Int(1, minimum=1)
    max_substeps = Int(1024, minimum=1)
    dense_cutoff = Int(None, minimum=0, auto=True)


class StudySection(Section):
    name = 'study'
    seed = Int(REQUIRED, minimum=0)
    T = Rational(Fraction(1))
    dt = Rational(Fraction(1, 64))
    functional = Choice(('phi1', 'phi2'), 'phi2')
    realizations = Int(200, minimum=2)
    reference = Choice(('control-variate', 'monte-carlo', 'closed-form'),
                       'control-variate')
    target = Choice(('auto', 'exact', 'galerkin'), 'auto')
    dt_ladder = List(Rational(), [Fraction(1, 2 ** k) for k in range(2, 7)])
    nx_ladder = List(Int(minimum=1), (4, 8, 16, 32))
    record = Record('final')
    tail_tolerance = Float(0.05, positive=True)
    axis = Choice(('space', 'time'), 'space')
    synthesis = Choice(('auto', 'projected', 'direct'), 'auto')
    scale = Choice(('desk', 'published'), 'desk')


SECTIONS = OrderedDict((s.name, s) for s in (
    MeshSection, ProblemSection, NoiseSection, KrylovSection, StudySection))


class StudyConfig(object):
    """Validated configuration, every key present.

    Values are reachable as ``config['study']['dt']`` or through the
    builders below, which turn them into the objects a run needs.
    """

    def __init__(self, values):
        self.values = values

    def __getitem__(self, section):
        return self.values[section]

    @property
    def seed(self):
        return self['study']['seed']

    def render(self):
        """The configuration in the format ``parse_config`` reads."""
        lines = []
        for name, section in SECTIONS.items():
            lines.extend(section.render(self.values[name]))
            lines.append('')
        return '\n'.join(lines)

    def lines(self):
        return [line for line in self.render().splitlines() if line]

    def override(self, section, key, value):
        self.values[section][key] = value

    def validate(self, command=None, require_seed=True):
        """Check the constraints between keys.

        ``command`` adds the checks of that command; the seed may be left
        to a later ``--seed`` with ``require_seed=False``.
        """
        mesh, noise, study = self['mesh'], self['noise'], self['study']
        krylov = self['krylov']
        if require_seed and study['seed'] is REQUIRED:
            raise ConfigError('study.seed', 'a seed is required, give it in '
                                            'the file or with --seed')
        if not noise['beta'] + noise['delta'] > 1:
            raise ConfigError('noise.beta', 'covariance is not trace class: '
                              'need beta + delta > 1, got %g'
                              % (noise['beta'] + noise['delta']))
        if krylov['max_substeps'] < krylov['substeps']:
            raise ConfigError('krylov.max_substeps',
                              'must be >= substeps')
        if mesh['bc'] == BoundaryKind.ROBIN and not mesh['alpha0'] > 0:
            log.warning('robin boundary with alpha0 = 0 is a neumann '
                        'boundary')
        time_axis = (command == 'converge-time' or
                     command == 'strong-study' and study['axis'] == 'time')
        if time_axis:
            for dt in study['dt_ladder']:
                _check_multiple('study.dt_ladder', study['T'], dt)
        else:
            _check_multiple('study.dt', study['T'], study['dt'])
        if command in ('converge-time', 'converge-space', 'strong-study'):
            key = time_axis and 'dt_ladder' or 'nx_ladder'
            ladder = study[key]
            if len(ladder) < 4:
                raise ConfigError('study.%s' % key, 'need at least 4 '
                                  'resolutions, got %d' % len(ladder))
            steps = [b - a for a, b in zip(ladder, ladder[1:])]
            if not (all(s > 0 for s in steps) or all(s < 0 for s in steps)):
                raise ConfigError('study.%s' % key, 'must be strictly '
                                  'monotone')
            if not self.problem().is_linear_benchmark:
                raise ConfigError('problem.preset', 'convergence studies '
                                  'need the linear additive benchmark '
                                  'with neumann boundaries')
        if command == 'converge-time' and study['target'] == 'galerkin':
            raise ConfigError('study.target', 'the galerkin solution is '
                              'stepped with the same dt and has no time '
                              'error; use exact or auto')
        return self

    def apply_scale(self, command):
        """Switch to the published study configuration when
        ``scale = published``."""
        study = self['study']
        if study['scale'] != 'published':
            return self
        phi1 = study['functional'] == 'phi1'
        study['realizations'] = 50
        if self['noise']['n_max'] is None:
            self['noise']['n_max'] = PUBLISHED_N_MAX
        if command == 'converge-time':
            study['T'] = Fraction(1)
            self['mesh']['nx'] = phi1 and 150 or 50
            self['mesh']['ny'] = None
        elif command in ('converge-space', 'strong-study'):
            study['T'] = Fraction(1, 10)
            study['dt'] = phi1 and Fraction(1, 500) or Fraction(1, 20000)
        log.info('published scale: %s', ', '.join(
            '%s=%s' % (k, v) for k, v in (('nx', self['mesh']['nx']),
                                          ('n_max', self['noise']['n_max']),
                                          ('T', study['T']),
                                          ('dt', study['dt']))))
        return self

    # builders

    def initial_value(self):
        name = self['problem']['initial']
        if name is None:
            return None
        if name == 'zero':
            return InitialValue.zero()
        if name == 'smooth':
            return InitialValue.smooth()
        if name == 'mode11':
            return InitialValue.mode(1, 1)
        scale = math.sqrt(self['mesh']['L1'] * self['mesh']['L2'])
        if name == 'smooth-offset':
            return InitialValue.smooth(offset=scale)
        return InitialValue(
            coefficients=lambda i, j: scale * (i == 0 and j == 0),
            name='constant')

    def problem(self):
        problem, mesh = self['problem'], self['mesh']
        p = presets[problem['preset']](
            D=problem['D'], reaction=problem['reaction'],
            X0=self.initial_value(), T=float(self['study']['T']),
            shift=problem['shift'],
            advection=(problem['advection_x'], problem['advection_y']),
            bc=mesh['bc'], alpha0=mesh['alpha0'],
            project_drift=problem['project_drift'])
        if problem['lipschitz'] is not None:
            p.lipschitz = problem['lipschitz']
        return p

    def noise_settings(self):
        noise = self['noise']
        return NoiseSettings(noise['beta'], noise['delta'], noise['q00'],
                             noise['n_max'])

    def krylov(self):
        return KrylovConfig(**self['krylov'])

    def run_config(self):
        study = self['study']
        M = int(study['T'] / study['dt'])
        return RunConfig.for_horizon(float(study['T']), M,
                                     krylov=self.krylov(),
                                     record=study['record'])

    def study(self, threads=1):
        study, mesh = self['study'], self['mesh']
        return WeakErrorConfig(
            problem=self.problem(), seed=study['seed'],
            functional=study['functional'],
            realizations=study['realizations'],
            reference=study['reference'], target=study['target'],
            T=float(study['T']),
            nx=mesh['nx'], dt=float(study['dt']),
            dt_ladder=tuple(float(dt) for dt in study['dt_ladder']),
            nx_ladder=tuple(study['nx_ladder']),
            noise=self.noise_settings(), krylov=self.krylov(),
            L1=mesh['L1'], L2=mesh['L2'], lumped=mesh['lumped'],
            tail_tolerance=study['tail_tolerance'],
            synthesis=study['synthesis'], threads=threads,
            config_echo=tuple(self.lines()))


def _check_multiple(key, T, dt):
    if (T / dt).denominator != 1:
        raise ConfigError(key, 'T = %s is not an integer multiple of %s'
                          % (_fraction_text(T), _fraction_text(dt)))


def parse_config(text=''):
    """Parse configuration ``text`` into a ``StudyConfig`` with all
    defaults filled in.

    Raises ``ConfigError`` naming ``section.key`` on unknown keys, values
    that do not parse and violated constraints.
    """
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as e:
        raise ConfigError('%s.%s' % (e.section, e.option), 'given twice')
    except configparser.Error as e:
        raise ConfigError('file', e.message.splitlines()[0])
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(name, 'unknown section')
    values = OrderedDict(
        (name, section.parse(parser.items(name)
                             if parser.has_section(name) else []))
        for name, section in SECTIONS.items())
    return StudyConfig(values).validate(require_seed=False)
