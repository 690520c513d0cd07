"""
URL configuration for the EnvelopeLab project.

Only the admin and the read-only run registry API are exposed; everything else in the
lab happens through management commands.
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('', include('lab.urls')),
]
