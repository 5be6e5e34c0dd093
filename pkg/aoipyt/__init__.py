# -*- coding: utf-8 -*-
__author__ = """AoI-Python Toolkit developers"""
__email__ = "aoipyt@users.noreply.github.com"
__version__ = "0.3.1"
__lastupdate__ = "18/10/2026"
__copyright__ = """Copyright 2026, AoI-Python Toolkit developers."""
__license__ = "EUPL License, Version 1.2"

from aoipyt.aoinet import aoinet
