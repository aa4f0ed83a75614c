"""Run the command line end to end in temporary directories."""

import os

import pytest

from sexpde.cli import RunManifest, build_parser, main, run


TINY = """
[mesh]
nx = 4

[noise]
n_max = 3

[study]
seed = 7
T = 1/2
dt = 1/8
realizations = 3
dt_ladder = 1/2, 1/4, 1/8, 1/16
nx_ladder = 2, 3, 4, 5
record = 2
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / 'tiny.cfg'
    path.write_text(TINY)
    return str(path)


def read(path):
    with open(path) as f:
        return f.read()


def test_parser():
    args = build_parser().parse_args(
        ['converge-time', '--seed', '3', '--threads', '2', '-vv'])
    assert args.command == 'converge-time'
    assert args.seed == 3 and args.threads == 2 and args.verbose == 2
    with pytest.raises(SystemExit):
        build_parser().parse_args(['plot'])


def test_thread_count(monkeypatch):
    monkeypatch.delenv('SEXPDE_THREADS', raising=False)
    assert RunManifest('selftest').thread_count == 1
    monkeypatch.setenv('SEXPDE_THREADS', '3')
    assert RunManifest('selftest').thread_count == 3
    assert RunManifest('selftest', threads=2).thread_count == 2
    with pytest.raises(ValueError):
        RunManifest('selftest', threads=0).thread_count
    with pytest.raises(ValueError):
        RunManifest('plot')


def test_simulate(config, tmp_path):
    out = str(tmp_path / 'out')
    assert main(['simulate', '--config', config, '--out', out,
                 '--mesh-dump']) == 0
    effective = read(os.path.join(out, 'effective.cfg'))
    assert 'seed = 7' in effective
    lines = read(os.path.join(out, 'snapshots.csv')).splitlines()
    header = lines.index('step,time,node_index,value')
    # the effective configuration leads every result file
    assert all(line.startswith('# ') for line in lines[:header])
    assert '# seed = 7' in lines
    # steps 0, 2 and 4 of a 5 x 5 node mesh
    assert len(lines) - header - 1 == 3 * 25
    assert os.path.exists(os.path.join(out, 'mesh.txt'))

    again = str(tmp_path / 'again')
    assert main(['simulate', '--config', config, '--out', again]) == 0
    assert read(os.path.join(again, 'snapshots.csv')) == \
        read(os.path.join(out, 'snapshots.csv'))


def test_converge_time_reproducible(config, tmp_path):
    outputs = []
    for threads in (1, 3):
        out = str(tmp_path / ('threads%d' % threads))
        status = run(RunManifest('converge-time', config=config, out=out,
                                 threads=threads))
        assert status == 0
        outputs.append(read(os.path.join(out, 'time.csv')))
    assert outputs[0] == outputs[1]
    lines = outputs[0].splitlines()
    header = lines.index(
        'study,functional,h,dt,T,realizations,error,mc_std_error')
    assert len(lines) == header + 1 + 4 + 1
    assert lines[-1].startswith('# fitted_rate=')


def test_seed_override(config, tmp_path):
    out = str(tmp_path / 'out')
    assert main(['converge-space', '--config', config, '--seed', '11',
                 '--out', out]) == 0
    text = read(os.path.join(out, 'space.csv'))
    assert '# seed = 11' in text.splitlines()


def test_selftest(tmp_path):
    out = str(tmp_path / 'out')
    status = main(['selftest', '--seed', '0', '--out', out])
    lines = read(os.path.join(out, 'selftest.csv')).splitlines()
    rows = lines[lines.index('check,value,limit,passed') + 1:]
    assert len(rows) == 6
    assert status == 0
    assert not any(r.endswith('FAIL') for r in rows)


def test_exit_codes(config, tmp_path, capsys):
    # no seed anywhere
    assert main(['selftest', '--out', str(tmp_path)]) == 2
    assert 'study.seed' in capsys.readouterr().err

    bad = tmp_path / 'bad.cfg'
    bad.write_text('[noise]\nbeta = 0\n')
    assert main(['simulate', '--config', str(bad), '--seed', '1',
                 '--out', str(tmp_path)]) == 2
    assert 'noise.beta' in capsys.readouterr().err

    assert main(['converge-time', '--config', config, '--preset',
                 'multiplicative-demo', '--out', str(tmp_path)]) == 2

    missing = str(tmp_path / 'missing.cfg')
    assert main(['simulate', '--config', missing, '--out',
                 str(tmp_path)]) == 3

    blocker = tmp_path / 'file'
    blocker.write_text('')
    assert main(['simulate', '--config', config, '--out',
                 str(blocker / 'sub')]) == 3
