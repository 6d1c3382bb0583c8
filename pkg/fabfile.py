"""
Creating standalone Django apps is a PITA because you're not in a project, so
you don't have a settings.py file.  I can never remember to define
DJANGO_SETTINGS_MODULE, so I run these tasks which get the right env
automatically.
"""
import os

from fabric import task

ROOT = os.path.abspath(os.path.dirname(__file__))
APP_NAME = 'selgen'
TEST_PATTERN = '"*_tests.py"'

os.environ['DJANGO_SETTINGS_MODULE'] = 'test_app.settings'
os.environ['PYTHONPATH'] = os.pathsep.join([ROOT, ])


def _admin(c, command):
    c.run('django-admin %s' % command, pty=True)


@task
def shell(c):
    """Start a Django shell with the test settings."""
    _admin(c, 'shell')


@task
def test(c, test_case=APP_NAME):
    """Run the test suite."""
    _admin(c, 'test -p %s %s' % (TEST_PATTERN, test_case))


@task
def test_coverage(c):
    c.run('coverage run --source=%s --omit=*/migrations/*.py '
          '$(which django-admin) test -p %s %s' % (
              APP_NAME, TEST_PATTERN, APP_NAME), pty=True)


@task
def migrate(c, migration=''):
    """Create or update the database used by the run records."""
    _admin(c, 'migrate %s %s' % (APP_NAME, migration))


@task
def makemigrations(c):
    """Create a schema migration for any model changes."""
    _admin(c, 'makemigrations %s' % APP_NAME)


@task
def pipeline(c, config, mode=''):
    """Run every stage of one experiment."""
    _admin(c, 'run_pipeline --config %s %s' % (
        config, '--mode %s' % mode if mode else ''))


@task
def test_pytest(c, test_case=APP_NAME):
    """Run the test suite under pytest-django."""
    c.run('pytest %s' % test_case, pty=True)
