"""Test suite for the barycentric-split Stokes element toolkit"""
