"""
Forecasting library for daily crude oil spot prices.

:license: MIT, see LICENSE for more details.
"""
