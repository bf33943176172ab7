"""Crude oil price forecasting from the command line."""
