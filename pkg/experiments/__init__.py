"""Simulation experiments"""
